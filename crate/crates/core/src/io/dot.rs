//! DOT (Graphviz) export of a finalized network.

use crate::graph::{Network, Node};

/// One directed graph: sum nodes labeled `+`, product nodes `×`, leaves
/// `family(scope)`. Sum out-edges carry their weight rounded to three
/// decimals. Node and edge statements come out in id order, so the text
/// is deterministic.
pub fn to_dot(network: &Network) -> String {
    let mut out = String::from("digraph spn {\n");
    out.push_str("  node [shape=ellipse];\n");
    for (id, node) in network.nodes() {
        let label = match node {
            Node::Sum { .. } => "+".to_string(),
            Node::Product { .. } => "\u{00d7}".to_string(),
            Node::Leaf {
                family, scope_var, ..
            } => format!("{}({})", network.registry().get(*family).name(), scope_var),
        };
        out.push_str(&format!("  n{} [label=\"{}\"];\n", id.index(), label));
    }
    for (id, node) in network.nodes() {
        match node {
            Node::Sum { children, weights } => {
                for (c, w) in children.iter().zip(weights) {
                    out.push_str(&format!(
                        "  n{} -> n{} [label=\"{:.3}\"];\n",
                        id.index(),
                        c.index(),
                        w
                    ));
                }
            }
            _ => {
                for c in node.children() {
                    out.push_str(&format!("  n{} -> n{};\n", id.index(), c.index()));
                }
            }
        }
    }
    out.push_str("}\n");
    out
}
