//! Backpropagation through the log circuit and full-batch gradient ascent.
//!
//! Parameters are optimized in an unconstrained reparameterized space:
//! sum weights and categorical pmfs as softmax logits, Gaussian standard
//! deviations and Pareto shapes through their logs. Leaves of other
//! (custom) families are held fixed. The optimizer tracks the best-seen
//! parameters by training log-likelihood and returns those, so the
//! reported final value never falls below the initial one.

use crate::data::{is_missing, DataMatrix};
use crate::error::{Error, Result};
use crate::graph::{Network, Node, NodeId};
use crate::infer::log_likelihood;

/// Options for [`optimize_parameters`]. Best-seen reporting is always on.
#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            epochs: 100,
            learning_rate: 0.05,
        }
    }
}

impl OptimizeOptions {
    fn check(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Construction(
                "learning rate must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Which reparameterized block a node contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    /// Softmax logits over sum weights.
    SumLogits,
    /// Softmax logits over a categorical pmf.
    CategoricalLogits,
    /// Gaussian [mean, log-std].
    Gaussian,
    /// Pareto [log-shape].
    Pareto,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    node: NodeId,
    kind: BlockKind,
    offset: usize,
    len: usize,
}

/// Mapping between a network's tunable parameters and a flat vector in
/// the reparameterized space.
#[derive(Debug, Clone)]
pub struct ParamLayout {
    blocks: Vec<Block>,
    total: usize,
}

impl ParamLayout {
    /// Build the layout for a network. Sum nodes and built-in leaf
    /// families contribute blocks; other leaves are skipped.
    pub fn new(network: &Network) -> Self {
        let mut blocks = Vec::new();
        let mut total = 0usize;
        for (id, node) in network.nodes() {
            let entry = match node {
                Node::Sum { weights, .. } => Some((BlockKind::SumLogits, weights.len())),
                Node::Product { .. } => None,
                Node::Leaf { family, params, .. } => {
                    match network.registry().get(*family).name() {
                        "categorical" => params
                            .vector("p")
                            .map(|p| (BlockKind::CategoricalLogits, p.len())),
                        "gaussian" => Some((BlockKind::Gaussian, 2)),
                        "pareto" => Some((BlockKind::Pareto, 1)),
                        _ => None,
                    }
                }
            };
            if let Some((kind, len)) = entry {
                blocks.push(Block {
                    node: id,
                    kind,
                    offset: total,
                    len,
                });
                total += len;
            }
        }
        ParamLayout { blocks, total }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Current parameters of `network` in reparameterized form.
    pub fn extract(&self, network: &Network) -> Vec<f64> {
        let mut theta = vec![0.0; self.total];
        for block in &self.blocks {
            let slot = &mut theta[block.offset..block.offset + block.len];
            match (block.kind, network.node(block.node)) {
                (BlockKind::SumLogits, Node::Sum { weights, .. }) => {
                    for (t, w) in slot.iter_mut().zip(weights) {
                        *t = w.ln();
                    }
                }
                (BlockKind::CategoricalLogits, Node::Leaf { params, .. }) => {
                    let p = params.vector("p").expect("layout matched params");
                    for (t, v) in slot.iter_mut().zip(p) {
                        *t = v.ln();
                    }
                }
                (BlockKind::Gaussian, Node::Leaf { params, .. }) => {
                    slot[0] = params.scalar("mean").expect("layout matched params");
                    slot[1] = params.scalar("stdev").expect("layout matched params").ln();
                }
                (BlockKind::Pareto, Node::Leaf { params, .. }) => {
                    slot[0] = params.scalar("a").expect("layout matched params").ln();
                }
                _ => unreachable!("layout out of sync with network"),
            }
        }
        theta
    }

    /// Materialize a network with parameters taken from `theta`.
    /// Structure and ids are unchanged.
    pub fn apply(&self, network: &Network, theta: &[f64]) -> Network {
        assert_eq!(theta.len(), self.total, "parameter vector length");
        let mut net = network.clone();
        for block in &self.blocks {
            let slot = &theta[block.offset..block.offset + block.len];
            match block.kind {
                BlockKind::SumLogits => {
                    if let Node::Sum { weights, .. } = net.node_mut(block.node) {
                        softmax_into(slot, weights);
                    }
                }
                BlockKind::CategoricalLogits => {
                    if let Node::Leaf { params, .. } = net.node_mut(block.node) {
                        let mut p = vec![0.0; slot.len()];
                        softmax_into(slot, &mut p);
                        params.set("p", crate::family::ParamValue::Vector(p));
                    }
                }
                BlockKind::Gaussian => {
                    if let Node::Leaf { params, .. } = net.node_mut(block.node) {
                        params.set("mean", crate::family::ParamValue::Scalar(slot[0]));
                        // validator floor for degenerate stds
                        let std = slot[1].exp().max(1e-6);
                        params.set("stdev", crate::family::ParamValue::Scalar(std));
                    }
                }
                BlockKind::Pareto => {
                    if let Node::Leaf { params, .. } = net.node_mut(block.node) {
                        params.set("a", crate::family::ParamValue::Scalar(slot[0].exp()));
                    }
                }
            }
        }
        net
    }
}

/// Softmax with exact renormalization so downstream validators see a sum
/// of exactly 1.
fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &t) in out.iter_mut().zip(logits) {
        *o = (t - m).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    let total: f64 = out.iter().sum();
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Gradient of the mean log-likelihood in the reparameterized space.
#[derive(Debug, Clone)]
pub struct GradientVector {
    pub values: Vec<f64>,
    /// Rows excluded because their log-likelihood was negative infinity.
    pub skipped_rows: usize,
    /// Mean log-likelihood over the included rows.
    pub mean_log_likelihood: f64,
}

/// Exact partial derivatives of the mean log-likelihood with respect to
/// the reparameterized parameters, one forward and one top-down pass per
/// row. Rows with zero likelihood are excluded and counted.
pub fn backprop_log_gradients(network: &Network, data: &DataMatrix) -> Result<GradientVector> {
    let layout = ParamLayout::new(network);
    backprop_with_layout(network, data, &layout)
}

fn backprop_with_layout(
    network: &Network,
    data: &DataMatrix,
    layout: &ParamLayout,
) -> Result<GradientVector> {
    if data.cols() != network.num_vars() {
        return Err(Error::Data(format!(
            "data has {} columns but the network is over {} variables",
            data.cols(),
            network.num_vars()
        )));
    }
    let mut grad = vec![0.0f64; layout.len()];
    let mut skipped = 0usize;
    let mut total_ll = 0.0f64;
    let mut included = 0usize;

    // per-node block lookup
    let mut block_of: Vec<Option<usize>> = vec![None; network.len()];
    for (i, b) in layout.blocks.iter().enumerate() {
        block_of[b.node.index()] = Some(i);
    }

    for r in 0..data.rows() {
        let row = data.row(r);
        let values = crate::infer::node_log_values(network, row).map_err(|e| match e {
            Error::Data(msg) => Error::Data(format!("row {r}: {msg}")),
            other => other,
        })?;
        let root_value = values[network.root().index()];
        if root_value == f64::NEG_INFINITY {
            skipped += 1;
            continue;
        }
        included += 1;
        total_ll += root_value;

        // adjoint of the root log value w.r.t. each node log value
        let mut adjoint = vec![0.0f64; network.len()];
        adjoint[network.root().index()] = 1.0;
        for id in (0..network.len()).rev() {
            let g = adjoint[id];
            if g == 0.0 {
                continue;
            }
            match network.node(NodeId(id)) {
                Node::Product { children } => {
                    for c in children {
                        adjoint[c.index()] += g;
                    }
                }
                Node::Sum { children, weights } => {
                    let v = values[id];
                    // responsibilities r_k = w_k exp(v_k) / exp(v)
                    let mut responsibilities = Vec::with_capacity(children.len());
                    for (c, w) in children.iter().zip(weights) {
                        let resp = w * (values[c.index()] - v).exp();
                        adjoint[c.index()] += g * resp;
                        responsibilities.push(resp);
                    }
                    if let Some(bi) = block_of[id] {
                        let block = &layout.blocks[bi];
                        for (k, (resp, w)) in
                            responsibilities.iter().zip(weights).enumerate()
                        {
                            grad[block.offset + k] += g * (resp - w);
                        }
                    }
                }
                Node::Leaf {
                    params, scope_var, ..
                } => {
                    let x = row[*scope_var];
                    if is_missing(x) {
                        continue;
                    }
                    let Some(bi) = block_of[id] else { continue };
                    let block = &layout.blocks[bi];
                    match block.kind {
                        BlockKind::CategoricalLogits => {
                            let p = params.vector("p").expect("layout matched params");
                            let observed = x as usize;
                            for (k, &pk) in p.iter().enumerate() {
                                let indicator = if k == observed { 1.0 } else { 0.0 };
                                grad[block.offset + k] += g * (indicator - pk);
                            }
                        }
                        BlockKind::Gaussian => {
                            let mean = params.scalar("mean").expect("layout matched params");
                            let std = params.scalar("stdev").expect("layout matched params");
                            let z = (x - mean) / std;
                            grad[block.offset] += g * z / std;
                            grad[block.offset + 1] += g * (z * z - 1.0);
                        }
                        BlockKind::Pareto => {
                            let a = params.scalar("a").expect("layout matched params");
                            grad[block.offset] += g * (1.0 - a * x.ln());
                        }
                        BlockKind::SumLogits => unreachable!("leaf with sum block"),
                    }
                }
            }
        }
    }

    if included == 0 {
        return Err(Error::Data(
            "every row has zero likelihood; nothing to differentiate".into(),
        ));
    }
    let scale = 1.0 / included as f64;
    for g in &mut grad {
        *g *= scale;
    }
    Ok(GradientVector {
        values: grad,
        skipped_rows: skipped,
        mean_log_likelihood: total_ll * scale,
    })
}

/// Full-batch gradient ascent on the mean log-likelihood for
/// `options.epochs` steps, returning the best-seen parameters by training
/// log-likelihood. Structure is unchanged and the result still validates.
pub fn optimize_parameters(
    network: &Network,
    data: &DataMatrix,
    options: &OptimizeOptions,
) -> Result<Network> {
    options.check()?;
    if options.epochs == 0 {
        return Ok(network.clone());
    }
    let layout = ParamLayout::new(network);
    if layout.is_empty() {
        return Ok(network.clone());
    }

    let score = |net: &Network| -> Result<f64> {
        let ll = log_likelihood(net, data)?;
        Ok(ll.iter().sum::<f64>() / ll.len() as f64)
    };

    let mut best_net = network.clone();
    let mut best_score = score(network)?;
    let mut theta = layout.extract(network);
    let mut current = network.clone();

    for _ in 0..options.epochs {
        let grad = backprop_with_layout(&current, data, &layout)?;
        for (t, g) in theta.iter_mut().zip(&grad.values) {
            *t += options.learning_rate * g;
        }
        current = layout.apply(network, &theta);
        let s = score(&current)?;
        if s > best_score {
            best_score = s;
            best_net = current.clone();
        }
    }
    Ok(best_net)
}
