//! Recursive structure learning and classifier learning.
//!
//! The learner decomposes a data slice the classic way: try to split
//! columns into independent groups (product node); otherwise cluster rows
//! (sum node weighted by cluster proportions); small slices and slices
//! that refuse to split fall back to naive factorization. Single columns
//! become maximum-likelihood leaves.

use std::sync::Arc;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::family::{FamilyRegistry, FitOptions};
use crate::graph::{Context, Domain, GraphBuilder, Network, NodeHandle};
use crate::learn::{column_partition, fit_leaf_mle, row_cluster, LearnHyperparams};
use crate::rng::RandomSource;

/// Learn a network over all context columns from complete training data.
pub fn learn_structure(
    registry: Arc<FamilyRegistry>,
    data: &DataMatrix,
    context: &Context,
    hyper: &LearnHyperparams,
) -> Result<Network> {
    hyper.check()?;
    check_training_data(data, context)?;
    let mut builder = GraphBuilder::new(registry);
    let mut rng = RandomSource::new(hyper.seed);
    let rows: Vec<usize> = (0..data.rows()).collect();
    let cols: Vec<usize> = (0..context.len()).collect();
    let root = build_slice(&mut builder, data, context, hyper, &rows, &cols, &mut rng)?;
    builder.finalize(root)
}

/// Learn a classifier: a root mixture with one branch per label value,
/// each branch learned on the rows carrying that label (all columns,
/// label included) and weighted by the label's fraction of the data.
pub fn learn_classifier(
    registry: Arc<FamilyRegistry>,
    data: &DataMatrix,
    context: &Context,
    label_column: usize,
    hyper: &LearnHyperparams,
) -> Result<Network> {
    hyper.check()?;
    check_training_data(data, context)?;
    if label_column >= context.len() {
        return Err(Error::Construction(format!(
            "label column {label_column} out of range"
        )));
    }
    let cardinality = match context.column(label_column).domain() {
        Domain::Categorical { cardinality } => *cardinality,
        Domain::Numeric { .. } => {
            return Err(Error::Construction(
                "label column must be categorical".into(),
            ))
        }
    };

    let mut partitions: Vec<Vec<usize>> = vec![Vec::new(); cardinality];
    for r in 0..data.rows() {
        partitions[data.get(r, label_column) as usize].push(r);
    }
    // absent label values contribute no branch
    partitions.retain(|p| !p.is_empty());

    let mut builder = GraphBuilder::new(registry);
    let mut rng = RandomSource::new(hyper.seed);
    let cols: Vec<usize> = (0..context.len()).collect();
    let mut children = Vec::with_capacity(partitions.len());
    let mut weights = Vec::with_capacity(partitions.len());
    for rows in &partitions {
        children.push(build_slice(
            &mut builder,
            data,
            context,
            hyper,
            rows,
            &cols,
            &mut rng,
        )?);
        weights.push(rows.len() as f64 / data.rows() as f64);
    }
    // a single present label collapses at finalization
    let root = builder.sum_any(&children, &weights)?;
    builder.finalize(root)
}

fn check_training_data(data: &DataMatrix, context: &Context) -> Result<()> {
    if data.rows() == 0 {
        return Err(Error::Data("training data is empty".into()));
    }
    if data.cols() != context.len() {
        return Err(Error::Data(format!(
            "data has {} columns but the context describes {}",
            data.cols(),
            context.len()
        )));
    }
    if data.has_missing() {
        return Err(Error::Data(
            "training data must be complete (no missing cells)".into(),
        ));
    }
    Ok(())
}

fn build_slice(
    builder: &mut GraphBuilder,
    data: &DataMatrix,
    context: &Context,
    hyper: &LearnHyperparams,
    rows: &[usize],
    cols: &[usize],
    rng: &mut RandomSource,
) -> Result<NodeHandle> {
    if cols.len() == 1 {
        return fit_leaf(builder, data, context, &hyper.fit_options(), rows, cols[0]);
    }
    if rows.len() < hyper.min_instances {
        return naive_factorization(builder, data, context, hyper, rows, cols);
    }

    let groups = column_partition(data, rows, cols, context, hyper.dependence_threshold);
    if groups.len() > 1 {
        let children: Vec<NodeHandle> = groups
            .iter()
            .map(|group| build_slice(builder, data, context, hyper, rows, group, rng))
            .collect::<Result<_>>()?;
        return builder.product(&children);
    }

    let clusters = row_cluster(data, rows, cols, context, hyper.cluster_count, rng.next_u64());
    if clusters.len() > 1 {
        let total = rows.len() as f64;
        let mut children = Vec::with_capacity(clusters.len());
        let mut weights = Vec::with_capacity(clusters.len());
        for cluster in &clusters {
            children.push(build_slice(builder, data, context, hyper, cluster, cols, rng)?);
            weights.push(cluster.len() as f64 / total);
        }
        return builder.sum(&children, &weights);
    }

    naive_factorization(builder, data, context, hyper, rows, cols)
}

/// Product of independent per-column MLE leaves.
fn naive_factorization(
    builder: &mut GraphBuilder,
    data: &DataMatrix,
    context: &Context,
    hyper: &LearnHyperparams,
    rows: &[usize],
    cols: &[usize],
) -> Result<NodeHandle> {
    let opts = hyper.fit_options();
    let leaves: Vec<NodeHandle> = cols
        .iter()
        .map(|&col| fit_leaf(builder, data, context, &opts, rows, col))
        .collect::<Result<_>>()?;
    builder.product(&leaves)
}

fn fit_leaf(
    builder: &mut GraphBuilder,
    data: &DataMatrix,
    context: &Context,
    opts: &FitOptions,
    rows: &[usize],
    col: usize,
) -> Result<NodeHandle> {
    let spec = context.column(col);
    let values = data.column_subset(rows, col);
    let params = fit_leaf_mle(builder.registry(), spec.family(), &values, spec, opts)?;
    builder.leaf(&spec.family().to_string(), params, col)
}
