//! Structure learning, classifier learning, leaf fitting and
//! gradient-based parameter optimization.

mod cluster;
mod optimize;
mod split;
mod structure;

pub use cluster::row_cluster;
pub use optimize::{
    backprop_log_gradients, optimize_parameters, GradientVector, OptimizeOptions, ParamLayout,
};
pub use split::column_partition;
pub use structure::{learn_classifier, learn_structure};

use crate::data::is_missing;
use crate::error::{Error, Result};
use crate::family::{FamilyRegistry, FitOptions, ParamMap};
use crate::graph::ColumnSpec;

/// Hyperparameters of the recursive structure learner.
#[derive(Debug, Clone, Copy)]
pub struct LearnHyperparams {
    /// Below this row count a slice is modeled by naive factorization.
    pub min_instances: usize,
    /// Column pairs with dependence score above this are kept together.
    pub dependence_threshold: f64,
    /// Number of clusters tried at sum-node row splits.
    pub cluster_count: usize,
    pub seed: u64,
    /// Laplace smoothing for categorical fits.
    pub laplace_alpha: f64,
    /// Lower bound for fitted Gaussian standard deviations.
    pub std_floor: f64,
}

impl Default for LearnHyperparams {
    fn default() -> Self {
        LearnHyperparams {
            min_instances: 200,
            dependence_threshold: 0.3,
            cluster_count: 2,
            seed: 0,
            laplace_alpha: 1.0,
            std_floor: 1e-6,
        }
    }
}

impl LearnHyperparams {
    pub(crate) fn check(&self) -> Result<()> {
        if self.min_instances < 1 {
            return Err(Error::Construction("min_instances must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.dependence_threshold) {
            return Err(Error::Construction(
                "dependence_threshold must lie in [0, 1]".into(),
            ));
        }
        if self.cluster_count < 2 {
            return Err(Error::Construction("cluster_count must be at least 2".into()));
        }
        Ok(())
    }

    pub(crate) fn fit_options(&self) -> FitOptions {
        FitOptions {
            laplace_alpha: self.laplace_alpha,
            std_floor: self.std_floor,
        }
    }
}

/// Maximum-likelihood parameters for one leaf over a value column.
/// Missing values are dropped; an all-missing column is a data error.
pub fn fit_leaf_mle(
    registry: &FamilyRegistry,
    family: &str,
    values: &[f64],
    column: &ColumnSpec,
    opts: &FitOptions,
) -> Result<ParamMap> {
    let observed: Vec<f64> = values.iter().copied().filter(|v| !is_missing(*v)).collect();
    if observed.is_empty() {
        return Err(Error::Data("cannot fit a leaf to an empty column".into()));
    }
    registry.by_name(family)?.mle(&observed, column.domain(), opts)
}
