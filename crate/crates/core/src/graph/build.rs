//! Network construction and finalization.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::family::{FamilyRegistry, ParamMap};
use crate::graph::{Network, Node, NodeId, Scope};

/// Handle to a node in an unfinalized builder arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeHandle(pub(crate) usize);

/// Mutable arena for assembling a network before finalization.
///
/// Children must exist before their parents reference them, so the public
/// API cannot create cycles; finalization still verifies acyclicity for
/// graphs assembled through internal paths.
pub struct GraphBuilder {
    registry: Arc<FamilyRegistry>,
    nodes: Vec<Node>,
}

impl GraphBuilder {
    pub fn new(registry: Arc<FamilyRegistry>) -> Self {
        GraphBuilder {
            registry,
            nodes: Vec::new(),
        }
    }

    /// Builder over the built-in families.
    pub fn with_builtins() -> Self {
        GraphBuilder::new(Arc::new(FamilyRegistry::with_builtins()))
    }

    pub fn registry(&self) -> &Arc<FamilyRegistry> {
        &self.registry
    }

    /// Number of nodes currently in the arena (pre-collapse).
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn check_handles(&self, children: &[NodeHandle]) -> Result<()> {
        for h in children {
            if h.0 >= self.nodes.len() {
                return Err(Error::Construction(format!(
                    "child handle {} does not exist",
                    h.0
                )));
            }
        }
        Ok(())
    }

    /// Weighted mixture over at least two children.
    pub fn sum(&mut self, children: &[NodeHandle], weights: &[f64]) -> Result<NodeHandle> {
        if children.len() != weights.len() {
            return Err(Error::Construction(format!(
                "sum arity mismatch: {} children, {} weights",
                children.len(),
                weights.len()
            )));
        }
        if children.len() < 2 {
            return Err(Error::Construction(
                "sum requires at least 2 children".into(),
            ));
        }
        self.sum_any(children, weights)
    }

    /// Sum without the arity check; used by the DSL parser and learners,
    /// which rely on finalization to collapse singleton branches.
    pub(crate) fn sum_any(
        &mut self,
        children: &[NodeHandle],
        weights: &[f64],
    ) -> Result<NodeHandle> {
        if children.len() != weights.len() || children.is_empty() {
            return Err(Error::Construction("sum requires children".into()));
        }
        self.check_handles(children)?;
        for &w in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Construction(format!(
                    "sum weight {w} must be finite and nonnegative"
                )));
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Sum {
            children: children.iter().map(|h| NodeId(h.0)).collect(),
            weights: weights.to_vec(),
        });
        Ok(NodeHandle(id))
    }

    /// Factorization over at least two children.
    pub fn product(&mut self, children: &[NodeHandle]) -> Result<NodeHandle> {
        if children.len() < 2 {
            return Err(Error::Construction(
                "product requires at least 2 children".into(),
            ));
        }
        self.check_handles(children)?;
        let id = self.nodes.len();
        self.nodes.push(Node::Product {
            children: children.iter().map(|h| NodeId(h.0)).collect(),
        });
        Ok(NodeHandle(id))
    }

    /// Leaf over one variable. Params are validated against the family and
    /// reordered into schema order.
    pub fn leaf(&mut self, family: &str, params: ParamMap, scope_var: usize) -> Result<NodeHandle> {
        let family_id = self
            .registry
            .lookup(family)
            .ok_or_else(|| Error::Construction(format!("unknown leaf family '{family}'")))?;
        let fam = self.registry.get(family_id);
        let params = params.canonicalize(fam.param_names()).map_err(|e| match e {
            Error::Construction(msg) => Error::Construction(format!("leaf '{family}': {msg}")),
            other => other,
        })?;
        let violations = fam.validate(&params);
        if !violations.is_empty() {
            return Err(Error::Construction(format!(
                "invalid parameters for leaf '{family}': {}",
                violations.join("; ")
            )));
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            family: family_id,
            params,
            scope_var,
        });
        Ok(NodeHandle(id))
    }

    /// Freeze the graph rooted at `root`: checks structure, collapses
    /// singleton sums/products, splices product children into product
    /// parents, normalizes sum weights, assigns ids children-first and
    /// computes scopes bottom-up.
    pub fn finalize(self, root: NodeHandle) -> Result<Network> {
        if self.nodes.is_empty() {
            return Err(Error::Model("empty network".into()));
        }
        if root.0 >= self.nodes.len() {
            return Err(Error::Model(format!("root handle {} does not exist", root.0)));
        }
        finalize_arena(self.nodes, root.0, self.registry)
    }
}

/// Finalization over a raw arena; shared by the builder and the loaders.
pub(crate) fn finalize_arena(
    arena: Vec<Node>,
    root: usize,
    registry: Arc<FamilyRegistry>,
) -> Result<Network> {
    check_reachable_acyclic(&arena, root)?;
    let (resolved, resolved_root) = collapse(&arena, root)?;
    emit(resolved, resolved_root, registry)
}

/// Iterative three-color DFS: rejects cycles and nodes unreachable from
/// the root.
fn check_reachable_acyclic(arena: &[Node], root: usize) -> Result<()> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Grey,
        Black,
    }
    let mut color = vec![Color::White; arena.len()];
    // stack entries: (node, next child index)
    let mut stack = vec![(root, 0usize)];
    color[root] = Color::Grey;
    while let Some(&mut (node, ref mut next)) = stack.last_mut() {
        let children = arena[node].children();
        if *next < children.len() {
            let child = children[*next].0;
            *next += 1;
            if child >= arena.len() {
                return Err(Error::Model(format!(
                    "node {node} references nonexistent child {child}"
                )));
            }
            match color[child] {
                Color::White => {
                    color[child] = Color::Grey;
                    stack.push((child, 0));
                }
                Color::Grey => {
                    return Err(Error::Model(format!(
                        "cycle detected through node {child}"
                    )))
                }
                Color::Black => {}
            }
        } else {
            color[node] = Color::Black;
            stack.pop();
        }
    }
    if let Some(unreached) = color.iter().position(|c| *c == Color::White) {
        return Err(Error::Model(format!(
            "node {unreached} is unreachable from the root"
        )));
    }
    Ok(())
}

/// Bottom-up rewrite into a fresh arena: normalizes sum weights, splices
/// resolved product children into product parents and replaces singleton
/// sums/products by their only child. Returns the new arena and the
/// resolved root index.
fn collapse(arena: &[Node], root: usize) -> Result<(Vec<Node>, usize)> {
    let mut out: Vec<Node> = Vec::with_capacity(arena.len());
    let mut memo: Vec<Option<usize>> = vec![None; arena.len()];

    // children-before-parent order over the original arena
    let order = postorder(arena, root);
    for &idx in &order {
        let resolved = match &arena[idx] {
            Node::Leaf {
                family,
                params,
                scope_var,
            } => {
                out.push(Node::Leaf {
                    family: *family,
                    params: params.clone(),
                    scope_var: *scope_var,
                });
                out.len() - 1
            }
            Node::Product { children } => {
                let mut spliced: Vec<NodeId> = Vec::with_capacity(children.len());
                for c in children {
                    let rc = memo[c.0].expect("children resolved first");
                    match &out[rc] {
                        // nested products are semantically redundant
                        Node::Product { children: inner } => spliced.extend(inner.iter().copied()),
                        _ => spliced.push(NodeId(rc)),
                    }
                }
                if spliced.len() == 1 {
                    spliced[0].0
                } else {
                    out.push(Node::Product { children: spliced });
                    out.len() - 1
                }
            }
            Node::Sum { children, weights } => {
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-6 {
                    return Err(Error::Model(format!(
                        "sum weights sum to {total}, expected 1 within 1e-6"
                    )));
                }
                // skip the division when the sum is 1 up to float
                // accumulation error; renormalizing again would perturb
                // already-normalized weights and break round trips
                let rounding = 4.0 * f64::EPSILON * weights.len().max(1) as f64;
                let normalized: Vec<f64> = if (total - 1.0).abs() <= rounding {
                    weights.clone()
                } else {
                    weights.iter().map(|w| w / total).collect()
                };
                let resolved_children: Vec<NodeId> = children
                    .iter()
                    .map(|c| NodeId(memo[c.0].expect("children resolved first")))
                    .collect();
                if resolved_children.len() == 1 {
                    resolved_children[0].0
                } else {
                    out.push(Node::Sum {
                        children: resolved_children,
                        weights: normalized,
                    });
                    out.len() - 1
                }
            }
        };
        memo[idx] = Some(resolved);
    }
    let resolved_root = memo[root].expect("root resolved");
    Ok((out, resolved_root))
}

/// Reachable nodes of `arena` in children-before-parent order.
fn postorder(arena: &[Node], root: usize) -> Vec<usize> {
    let mut order = Vec::new();
    let mut visited = vec![false; arena.len()];
    let mut stack = vec![(root, 0usize)];
    visited[root] = true;
    while let Some(&mut (node, ref mut next)) = stack.last_mut() {
        let children = arena[node].children();
        if *next < children.len() {
            let child = children[*next].0;
            *next += 1;
            if !visited[child] {
                visited[child] = true;
                stack.push((child, 0));
            }
        } else {
            order.push(node);
            stack.pop();
        }
    }
    order
}

/// Assign final ids by a post-order walk (children first, original child
/// order), drop unreachable nodes, sort child lists by id and compute
/// scopes bottom-up.
fn emit(arena: Vec<Node>, root: usize, registry: Arc<FamilyRegistry>) -> Result<Network> {
    let order = postorder(&arena, root);
    let mut new_id: HashMap<usize, usize> = HashMap::with_capacity(order.len());
    let mut nodes: Vec<Node> = Vec::with_capacity(order.len());
    for &idx in &order {
        let node = match &arena[idx] {
            Node::Leaf {
                family,
                params,
                scope_var,
            } => Node::Leaf {
                family: *family,
                params: params.clone(),
                scope_var: *scope_var,
            },
            Node::Product { children } => Node::Product {
                children: children.iter().map(|c| NodeId(new_id[&c.0])).collect(),
            },
            Node::Sum { children, weights } => Node::Sum {
                children: children.iter().map(|c| NodeId(new_id[&c.0])).collect(),
                weights: weights.clone(),
            },
        };
        new_id.insert(idx, nodes.len());
        nodes.push(node);
    }

    // canonical child order: ascending by id (weights stay paired)
    for node in &mut nodes {
        match node {
            Node::Product { children } => children.sort_unstable(),
            Node::Sum { children, weights } => {
                let mut paired: Vec<(NodeId, f64)> =
                    children.iter().copied().zip(weights.iter().copied()).collect();
                paired.sort_by_key(|(c, _)| *c);
                for (i, (c, w)) in paired.into_iter().enumerate() {
                    children[i] = c;
                    weights[i] = w;
                }
            }
            Node::Leaf { .. } => {}
        }
    }

    let mut scopes: Vec<Scope> = Vec::with_capacity(nodes.len());
    for (i, node) in nodes.iter().enumerate() {
        let scope = match node {
            Node::Leaf { scope_var, .. } => Scope::singleton(*scope_var),
            _ => {
                let mut scope = Scope::default();
                for c in node.children() {
                    debug_assert!(c.0 < i, "children precede parents");
                    scope = scope.union(&scopes[c.0]);
                }
                scope
            }
        };
        scopes.push(scope);
    }

    let root_id = NodeId(nodes.len() - 1);
    Ok(Network::from_parts(nodes, scopes, root_id, registry))
}

/// Re-run finalization on an already finalized network; idempotence
/// checks use this.
#[cfg(test)]
pub(crate) fn refinalize(network: &Network) -> Result<Network> {
    finalize_arena(
        network.nodes().map(|(_, n)| n.clone()).collect(),
        network.root().index(),
        Arc::clone(network.registry()),
    )
}
