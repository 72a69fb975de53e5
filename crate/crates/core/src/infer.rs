//! Log-domain bottom-up evaluation: joint and marginal queries, and
//! approximate MPE via the max circuit with top-down path selection.
//!
//! All passes run once over the node store in id order (children before
//! parents), so evaluation is linear in the network size. Missing cells
//! marginalize their variable: the leaf contributes log 1 = 0.

use crate::data::{is_missing, DataMatrix};
use crate::error::{Error, Result};
use crate::graph::{Network, Node, NodeId};

/// Stable weighted log-sum-exp: log Σ w_k exp(v_k), shifting by the
/// largest child value.
pub(crate) fn weighted_log_sum_exp(children: &[f64], weights: &[f64]) -> f64 {
    // a normalized mixture over fully marginalized children is exactly 1,
    // so fully missing queries return exactly log 1 = 0
    if children.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let m = children.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let total: f64 = children
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - m).exp())
        .sum();
    m + total.ln()
}

fn check_cols(network: &Network, cols: usize) -> Result<()> {
    if cols != network.num_vars() {
        return Err(Error::Data(format!(
            "data has {cols} columns but the network is over {} variables",
            network.num_vars()
        )));
    }
    Ok(())
}

/// Evaluate one row bottom-up; `row[scope_var]` may be missing. Leaf
/// densities returning NaN become data errors naming the column.
fn eval_row(network: &Network, row: &[f64]) -> Result<Vec<f64>> {
    let mut values = vec![0.0f64; network.len()];
    for (id, node) in network.nodes() {
        values[id.index()] = match node {
            Node::Leaf {
                family,
                params,
                scope_var,
            } => {
                let v = row[*scope_var];
                if is_missing(v) {
                    0.0
                } else {
                    let ld = network.registry().get(*family).log_density(params, v);
                    if ld.is_nan() {
                        return Err(Error::Data(format!(
                            "column {scope_var}: value {v} outside the domain of family '{}'",
                            network.registry().get(*family).name()
                        )));
                    }
                    debug_assert!(ld < f64::INFINITY);
                    ld
                }
            }
            Node::Product { children } => {
                children.iter().map(|c| values[c.index()]).sum()
            }
            Node::Sum { children, weights } => {
                let child_values: Vec<f64> =
                    children.iter().map(|c| values[c.index()]).collect();
                weighted_log_sum_exp(&child_values, weights)
            }
        };
    }
    Ok(values)
}

/// Per-node log values of one forward pass (natural log). Missing cells
/// marginalize their leaf.
pub fn node_log_values(network: &Network, row: &[f64]) -> Result<Vec<f64>> {
    check_cols(network, row.len())?;
    eval_row(network, row)
}

/// Log-probability of each row; missing cells yield marginals.
pub fn log_likelihood(network: &Network, data: &DataMatrix) -> Result<Vec<f64>> {
    check_cols(network, data.cols())?;
    let mut out = Vec::with_capacity(data.rows());
    for (r, row) in data.row_iter().enumerate() {
        let values = eval_row(network, row).map_err(|e| match e {
            Error::Data(msg) => Error::Data(format!("row {r}: {msg}")),
            other => other,
        })?;
        out.push(values[network.root().index()]);
    }
    Ok(out)
}

/// Bottom-up pass of the max circuit: sum nodes take the weighted maximum
/// instead of the weighted sum, and missing-variable leaves contribute
/// their density at the mode.
pub fn max_circuit_log_values(network: &Network, row: &[f64]) -> Result<Vec<f64>> {
    check_cols(network, row.len())?;
    max_values_unchecked(network, row)
}

fn max_values_unchecked(network: &Network, row: &[f64]) -> Result<Vec<f64>> {
    let mut values = vec![0.0f64; network.len()];
    for (id, node) in network.nodes() {
        values[id.index()] = match node {
            Node::Leaf {
                family,
                params,
                scope_var,
            } => {
                let fam = network.registry().get(*family);
                let v = row[*scope_var];
                let point = if is_missing(v) { fam.mode(params) } else { v };
                let ld = fam.log_density(params, point);
                if ld.is_nan() {
                    return Err(Error::Data(format!(
                        "column {scope_var}: value {point} outside the domain of family '{}'",
                        fam.name()
                    )));
                }
                ld
            }
            Node::Product { children } => children.iter().map(|c| values[c.index()]).sum(),
            Node::Sum { children, weights } => children
                .iter()
                .zip(weights)
                .map(|(c, w)| w.ln() + values[c.index()])
                .fold(f64::NEG_INFINITY, f64::max),
        };
    }
    Ok(values)
}

/// Complete every missing cell with an approximate most probable
/// explanation: bottom-up max pass, then a top-down pass descending the
/// argmax child at sum nodes (ties break to the smallest child id) and
/// emitting leaf modes at reached missing variables. Evidence cells are
/// never overwritten.
pub fn mpe(network: &Network, data: &DataMatrix) -> Result<DataMatrix> {
    check_cols(network, data.cols())?;
    let mut out = data.clone();
    for r in 0..data.rows() {
        let row: Vec<f64> = data.row(r).to_vec();
        let values = max_values_unchecked(network, &row).map_err(|e| match e {
            Error::Data(msg) => Error::Data(format!("row {r}: {msg}")),
            other => other,
        })?;
        // top-down selection of one induced tree
        let mut stack: Vec<NodeId> = vec![network.root()];
        while let Some(id) = stack.pop() {
            match network.node(id) {
                Node::Leaf {
                    family,
                    params,
                    scope_var,
                } => {
                    if is_missing(out.get(r, *scope_var)) {
                        let mode = network.registry().get(*family).mode(params);
                        out.set(r, *scope_var, mode);
                    }
                }
                Node::Product { children } => stack.extend(children.iter().copied()),
                Node::Sum { children, weights } => {
                    // children are in ascending id order; strict > keeps
                    // the smallest id on ties
                    let mut best = 0usize;
                    let mut best_value = f64::NEG_INFINITY;
                    for (k, (c, w)) in children.iter().zip(weights).enumerate() {
                        let value = w.ln() + values[c.index()];
                        if value > best_value {
                            best_value = value;
                            best = k;
                        }
                    }
                    stack.push(children[best]);
                }
            }
        }
    }
    Ok(out)
}
