//! Seeded random network structures over a column context.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::family::FamilyRegistry;
use crate::graph::{Context, GraphBuilder, Network, NodeHandle};
use crate::rng::RandomSource;

/// Generate a valid network over every context column: alternating sum and
/// product layers. Sums get `fanout` children with random convex weights;
/// products split their scope into two random blocks; exhausted depth or
/// singleton scopes close with family-default leaves drawn from the
/// column domains. Deterministic given the seed.
pub fn generate_random_structure(
    registry: Arc<FamilyRegistry>,
    context: &Context,
    depth: usize,
    fanout: usize,
    seed: u64,
) -> Result<Network> {
    if depth < 1 {
        return Err(Error::Construction("depth must be at least 1".into()));
    }
    if fanout < 2 {
        return Err(Error::Construction("fanout must be at least 2".into()));
    }
    if context.is_empty() {
        return Err(Error::Construction("context has no columns".into()));
    }
    let mut rng = RandomSource::new(seed);
    let mut builder = GraphBuilder::new(registry);
    let scope: Vec<usize> = (0..context.len()).collect();
    let root = gen_sum(&mut builder, context, &scope, depth, fanout, &mut rng)?;
    builder.finalize(root)
}

fn gen_sum(
    builder: &mut GraphBuilder,
    context: &Context,
    scope: &[usize],
    depth: usize,
    fanout: usize,
    rng: &mut RandomSource,
) -> Result<NodeHandle> {
    let children: Vec<NodeHandle> = (0..fanout)
        .map(|_| gen_child(builder, context, scope, depth, fanout, rng))
        .collect::<Result<_>>()?;
    let mut weights: Vec<f64> = (0..fanout).map(|_| rng.uniform_open()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    builder.sum(&children, &weights)
}

fn gen_child(
    builder: &mut GraphBuilder,
    context: &Context,
    scope: &[usize],
    depth: usize,
    fanout: usize,
    rng: &mut RandomSource,
) -> Result<NodeHandle> {
    if scope.len() == 1 {
        if depth > 1 {
            // single variable left: burn remaining depth as a sum chain
            return gen_sum(builder, context, scope, depth - 1, fanout, rng);
        }
        return gen_leaf(builder, context, scope[0], rng);
    }
    if depth <= 1 {
        // depth exhausted: fully factorize the remaining scope
        let leaves: Vec<NodeHandle> = scope
            .iter()
            .map(|&var| gen_leaf(builder, context, var, rng))
            .collect::<Result<_>>()?;
        return builder.product(&leaves);
    }
    // random two-block partition of a shuffled scope
    let mut vars = scope.to_vec();
    for i in (1..vars.len()).rev() {
        vars.swap(i, rng.below(i + 1));
    }
    let cut = 1 + rng.below(vars.len() - 1);
    let (left, right) = vars.split_at(cut);
    let mut blocks = vec![left.to_vec(), right.to_vec()];
    for b in &mut blocks {
        b.sort_unstable();
    }
    let children: Vec<NodeHandle> = blocks
        .iter()
        .map(|block| {
            if block.len() == 1 {
                gen_leaf(builder, context, block[0], rng)
            } else {
                gen_sum(builder, context, block, depth - 1, fanout, rng)
            }
        })
        .collect::<Result<_>>()?;
    builder.product(&children)
}

fn gen_leaf(
    builder: &mut GraphBuilder,
    context: &Context,
    var: usize,
    rng: &mut RandomSource,
) -> Result<NodeHandle> {
    let spec = context.column(var);
    let family = builder.registry().by_name(spec.family())?;
    let name = family.name().to_string();
    let params = family.random_params(spec.domain(), rng).ok_or_else(|| {
        Error::Construction(format!(
            "family '{name}' has no random-parameter handler"
        ))
    })?;
    builder.leaf(&name, params, var)
}
