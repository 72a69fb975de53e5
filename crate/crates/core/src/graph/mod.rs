//! SPN graph representation: nodes, scopes, networks and construction.
//!
//! Networks are built through a [`GraphBuilder`] and frozen by
//! [`GraphBuilder::finalize`], which assigns dense ids in
//! children-before-parent order, normalizes sum weights, collapses
//! redundant structure and computes scopes bottom-up. Finalized networks
//! are immutable and safe to share across threads.

mod build;
mod context;
mod random;
mod validity;

pub use build::{GraphBuilder, NodeHandle};
pub(crate) use build::finalize_arena as finalize_loaded;
pub use context::{ColumnSpec, Context, Domain};
pub use random::generate_random_structure;
pub use validity::{
    structure_stats, validate, StructureStats, ValidityReport, Violation, ViolationKind,
};

use std::sync::Arc;

use crate::family::{FamilyId, FamilyRegistry, LeafFamily, ParamMap};

/// Dense index of a node inside a finalized network.
///
/// After finalization ids run 0..n-1 and every child id is numerically
/// smaller than its parent id, so one forward pass in id order visits
/// children before parents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One node of a network: a weighted mixture, a factorization, or a
/// univariate leaf distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Sum {
        children: Vec<NodeId>,
        weights: Vec<f64>,
    },
    Product {
        children: Vec<NodeId>,
    },
    Leaf {
        family: FamilyId,
        params: ParamMap,
        scope_var: usize,
    },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Sum { children, .. } | Node::Product { children } => children,
            Node::Leaf { .. } => &[],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Node::Sum { .. } => "sum",
            Node::Product { .. } => "product",
            Node::Leaf { .. } => "leaf",
        }
    }
}

/// Sorted set of variable (column) indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scope(Vec<usize>);

impl Scope {
    pub fn singleton(var: usize) -> Self {
        Scope(vec![var])
    }

    pub fn from_vars(mut vars: Vec<usize>) -> Self {
        vars.sort_unstable();
        vars.dedup();
        Scope(vars)
    }

    pub fn union(&self, other: &Scope) -> Scope {
        let mut vars = Vec::with_capacity(self.0.len() + other.0.len());
        vars.extend_from_slice(&self.0);
        vars.extend_from_slice(&other.0);
        Scope::from_vars(vars)
    }

    pub fn is_disjoint(&self, other: &Scope) -> bool {
        // merge walk over the two sorted lists
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn contains(&self, var: usize) -> bool {
        self.0.binary_search(&var).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// A finalized sum-product network: an immutable rooted DAG whose node
/// store is in children-before-parent order with per-node scopes.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<Node>,
    scopes: Vec<Scope>,
    root: NodeId,
    registry: Arc<FamilyRegistry>,
}

impl Network {
    pub(crate) fn from_parts(
        nodes: Vec<Node>,
        scopes: Vec<Scope>,
        root: NodeId,
        registry: Arc<FamilyRegistry>,
    ) -> Self {
        Network {
            nodes,
            scopes,
            root,
            registry,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    /// Parameter mutation for the optimizer; structure must not change.
    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn scope(&self, id: NodeId) -> &Scope {
        &self.scopes[id.0]
    }

    pub fn root_scope(&self) -> &Scope {
        &self.scopes[self.root.0]
    }

    /// Number of data columns the network is defined over
    /// (largest scope variable plus one).
    pub fn num_vars(&self) -> usize {
        self.root_scope().iter().max().map(|v| v + 1).unwrap_or(0)
    }

    pub fn registry(&self) -> &Arc<FamilyRegistry> {
        &self.registry
    }

    /// Family handlers for a leaf node.
    pub fn family(&self, id: NodeId) -> Option<&LeafFamily> {
        match &self.nodes[id.0] {
            Node::Leaf { family, .. } => Some(self.registry.get(*family)),
            _ => None,
        }
    }

    /// Node-by-node equality of kinds, children, weights, family names,
    /// parameters and scope variables. Registries may differ as long as
    /// family names agree.
    pub fn structurally_equal(&self, other: &Network) -> bool {
        if self.nodes.len() != other.nodes.len() || self.root != other.root {
            return false;
        }
        self.nodes.iter().zip(&other.nodes).all(|(a, b)| match (a, b) {
            (
                Node::Sum {
                    children: ca,
                    weights: wa,
                },
                Node::Sum {
                    children: cb,
                    weights: wb,
                },
            ) => ca == cb && wa == wb,
            (Node::Product { children: ca }, Node::Product { children: cb }) => ca == cb,
            (
                Node::Leaf {
                    family: fa,
                    params: pa,
                    scope_var: sa,
                },
                Node::Leaf {
                    family: fb,
                    params: pb,
                    scope_var: sb,
                },
            ) => {
                self.registry.get(*fa).name() == other.registry.get(*fb).name()
                    && pa == pb
                    && sa == sb
            }
            _ => false,
        })
    }
}
