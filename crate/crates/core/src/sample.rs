//! Exact ancestral and conditional sampling.
//!
//! Each template row is completed in two passes: a bottom-up evidence pass
//! (missing cells marginalized), then a top-down pass that draws a child
//! at every sum node with probability proportional to weight times the
//! child's evidence likelihood — the exact posterior over the latent
//! branch — and draws leaf values for missing cells. With an all-missing
//! template the branch probabilities reduce to the weights (prior
//! ancestral sampling).

use crate::data::{is_missing, DataMatrix};
use crate::error::{Error, Result};
use crate::family::{FamilyRegistry, ParamMap};
use crate::graph::{Network, Node, NodeId};
use crate::infer::node_log_values;
use crate::rng::RandomSource;

/// Fill the missing cells of `template`; evidence cells pass through
/// unchanged. Evidence with zero probability under the network is a data
/// error, as are non-finite (infinite) evidence values.
pub fn sample(
    network: &Network,
    template: &DataMatrix,
    rng: &mut RandomSource,
) -> Result<DataMatrix> {
    if template.cols() != network.num_vars() {
        return Err(Error::Data(format!(
            "template has {} columns but the network is over {} variables",
            template.cols(),
            network.num_vars()
        )));
    }
    let mut out = template.clone();
    for r in 0..template.rows() {
        let row: Vec<f64> = template.row(r).to_vec();
        if let Some(col) = row.iter().position(|v| v.is_infinite()) {
            return Err(Error::Data(format!(
                "row {r}, column {col}: nonfinite evidence"
            )));
        }
        let values = node_log_values(network, &row).map_err(|e| match e {
            Error::Data(msg) => Error::Data(format!("row {r}: {msg}")),
            other => other,
        })?;
        if values[network.root().index()] == f64::NEG_INFINITY {
            return Err(Error::Data(format!(
                "row {r}: evidence has zero probability under the network"
            )));
        }
        let mut stack: Vec<NodeId> = vec![network.root()];
        while let Some(id) = stack.pop() {
            match network.node(id) {
                Node::Leaf {
                    family,
                    params,
                    scope_var,
                } => {
                    if is_missing(out.get(r, *scope_var)) {
                        let fam = network.registry().get(*family);
                        out.set(r, *scope_var, fam.sample(params, rng));
                    }
                }
                Node::Product { children } => stack.extend(children.iter().copied()),
                Node::Sum { children, weights } => {
                    stack.push(draw_branch(children, weights, &values, rng));
                }
            }
        }
    }
    Ok(out)
}

/// Draw one sum child from the posterior over branches given the evidence
/// pass values: mass_k proportional to w_k exp(v_k).
fn draw_branch(
    children: &[NodeId],
    weights: &[f64],
    values: &[f64],
    rng: &mut RandomSource,
) -> NodeId {
    let m = children
        .iter()
        .map(|c| values[c.index()])
        .fold(f64::NEG_INFINITY, f64::max);
    let mass: Vec<f64> = children
        .iter()
        .zip(weights)
        .map(|(c, w)| w * (values[c.index()] - m).exp())
        .collect();
    let total: f64 = mass.iter().sum();
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    for (k, p) in mass.iter().enumerate() {
        acc += p;
        if u < acc {
            return children[k];
        }
    }
    // float leftovers: last branch with positive posterior mass
    let k = mass
        .iter()
        .rposition(|p| *p > 0.0)
        .unwrap_or(children.len() - 1);
    children[k]
}

/// One draw from a registered leaf family.
pub fn leaf_sample(
    registry: &FamilyRegistry,
    family: &str,
    params: &ParamMap,
    rng: &mut RandomSource,
) -> Result<f64> {
    let fam = registry.by_name(family)?;
    let violations = fam.validate(params);
    if !violations.is_empty() {
        return Err(Error::Construction(format!(
            "invalid parameters for leaf '{family}': {}",
            violations.join("; ")
        )));
    }
    Ok(fam.sample(params, rng))
}
