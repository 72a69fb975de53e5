//! Validity checking and structure statistics over finalized networks.

use crate::graph::{Network, Node, NodeId, Scope};

/// What a validity violation is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// A sum child's scope differs from its siblings'.
    Completeness,
    /// Product children have overlapping scopes.
    Decomposability,
    /// Sum weights are negative or do not sum to 1.
    WeightNormalization,
    /// Leaf parameters fail the family validator.
    ParamInvalid,
    /// Graph-shape problems (ordering, arity, scope bookkeeping).
    Structural,
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ViolationKind::Completeness => "completeness",
            ViolationKind::Decomposability => "decomposability",
            ViolationKind::WeightNormalization => "weight-normalization",
            ViolationKind::ParamInvalid => "param-invalid",
            ViolationKind::Structural => "structural",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub node: NodeId,
    pub kind: ViolationKind,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "node {}: {}: {}", self.node, self.kind, self.message)
    }
}

/// Outcome of [`validate`]; `ok()` iff no violations were found.
#[derive(Debug, Clone, Default)]
pub struct ValidityReport {
    violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

impl std::fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.ok() {
            writeln!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Check completeness, decomposability, weight normalization, leaf
/// parameters and structural bookkeeping. Violations are data, not
/// failures: the report lists everything found.
pub fn validate(network: &Network) -> ValidityReport {
    let mut violations = Vec::new();
    let mut push = |node: NodeId, kind: ViolationKind, message: String| {
        violations.push(Violation {
            node,
            kind,
            message,
        })
    };

    for (id, node) in network.nodes() {
        for child in node.children() {
            if child.index() >= id.index() {
                push(
                    id,
                    ViolationKind::Structural,
                    format!("child {child} does not precede its parent"),
                );
            }
        }
        match node {
            Node::Sum { children, weights } => {
                if children.len() < 2 {
                    push(
                        id,
                        ViolationKind::Structural,
                        "sum has fewer than 2 children".into(),
                    );
                }
                if weights.len() != children.len() {
                    push(
                        id,
                        ViolationKind::Structural,
                        "weight count differs from child count".into(),
                    );
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    push(
                        id,
                        ViolationKind::WeightNormalization,
                        "weights must be finite and nonnegative".into(),
                    );
                } else {
                    let total: f64 = weights.iter().sum();
                    if (total - 1.0).abs() > 1e-6 {
                        push(
                            id,
                            ViolationKind::WeightNormalization,
                            format!("weights sum to {total}"),
                        );
                    }
                }
                if let Some(first) = children.first() {
                    let expect = network.scope(*first);
                    for child in &children[1..] {
                        if network.scope(*child) != expect {
                            push(
                                id,
                                ViolationKind::Completeness,
                                format!(
                                    "child {child} scope {:?} differs from sibling scope {:?}",
                                    network.scope(*child).as_slice(),
                                    expect.as_slice()
                                ),
                            );
                            break;
                        }
                    }
                }
            }
            Node::Product { children } => {
                if children.len() < 2 {
                    push(
                        id,
                        ViolationKind::Structural,
                        "product has fewer than 2 children".into(),
                    );
                }
                // disjointness: union size must equal the sum of sizes
                let total: usize = children.iter().map(|c| network.scope(*c).len()).sum();
                if network.scope(id).len() != total {
                    push(
                        id,
                        ViolationKind::Decomposability,
                        "children scopes overlap".into(),
                    );
                }
            }
            Node::Leaf { family, params, .. } => {
                for msg in network.registry().get(*family).validate(params) {
                    push(id, ViolationKind::ParamInvalid, msg);
                }
            }
        }
        // scope bookkeeping: internal scope is the union of child scopes
        if !node.is_leaf() {
            let mut union = Scope::default();
            for c in node.children() {
                union = union.union(network.scope(*c));
            }
            if &union != network.scope(id) {
                push(
                    id,
                    ViolationKind::Structural,
                    "stored scope differs from union of child scopes".into(),
                );
            }
        }
        if network.scope(id).is_empty() {
            push(id, ViolationKind::Structural, "empty scope".into());
        }
    }

    ValidityReport { violations }
}

/// Node/edge/depth/parameter counts over a finalized network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureStats {
    pub sums: usize,
    pub products: usize,
    pub leaves: usize,
    pub edges: usize,
    /// Edges on the longest root-to-leaf path.
    pub depth: usize,
    /// Sum weights (one degree of freedom removed per sum node) plus leaf
    /// family free parameters.
    pub free_params: usize,
}

pub fn structure_stats(network: &Network) -> StructureStats {
    let mut stats = StructureStats {
        sums: 0,
        products: 0,
        leaves: 0,
        edges: 0,
        depth: 0,
        free_params: 0,
    };
    // height below each node, in id order so children come first
    let mut height = vec![0usize; network.len()];
    for (id, node) in network.nodes() {
        stats.edges += node.children().len();
        match node {
            Node::Sum { children, .. } => {
                stats.sums += 1;
                stats.free_params += children.len().saturating_sub(1);
            }
            Node::Product { .. } => stats.products += 1,
            Node::Leaf { family, params, .. } => {
                stats.leaves += 1;
                stats.free_params += network.registry().get(*family).free_params(params);
            }
        }
        height[id.index()] = node
            .children()
            .iter()
            .map(|c| height[c.index()] + 1)
            .max()
            .unwrap_or(0);
    }
    stats.depth = height[network.root().index()];
    stats
}
