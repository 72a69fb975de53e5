//! A self-contained sum-product network (SPN) engine.
//!
//! Networks over mixed discrete/continuous variables are built through a
//! [`GraphBuilder`] or parsed from a textual DSL, validated for
//! completeness and decomposability, queried for joint/marginal
//! log-likelihoods and approximate MPE states, sampled exactly
//! (ancestrally or conditioned on evidence), learned from data, serialized
//! to DSL/JSON/DOT, and compiled to standalone C99 evaluators.
//!
//! Evaluation runs in the natural-log domain with log-sum-exp at sum
//! nodes; missing cells (IEEE NaN) marginalize their variable.
//!
//! ```
//! use spn_core::{DataMatrix, GraphBuilder, ParamMap, log_likelihood, mpe};
//!
//! # fn main() -> spn_core::Result<()> {
//! let mut b = GraphBuilder::with_builtins();
//! let heads = b.leaf("categorical", ParamMap::new().with_vector("p", vec![0.2, 0.8]), 0)?;
//! let tails = b.leaf("categorical", ParamMap::new().with_vector("p", vec![0.6, 0.4]), 0)?;
//! let root = b.sum(&[heads, tails], &[0.5, 0.5])?;
//! let net = b.finalize(root)?;
//!
//! let ll = log_likelihood(&net, &DataMatrix::from_row(&[1.0]))?;
//! assert!((ll[0].exp() - 0.6).abs() < 1e-12);
//!
//! // an all-missing row is completed with the most probable state
//! let completed = mpe(&net, &DataMatrix::from_row(&[f64::NAN]))?;
//! assert_eq!(completed.get(0, 0), 1.0);
//! # Ok(())
//! # }
//! ```

pub mod codegen;
pub mod data;
pub mod error;
pub mod family;
pub mod graph;
pub mod infer;
pub mod io;
pub mod learn;
pub mod rng;
pub mod sample;

pub use codegen::{emit_source, EmitOptions};
pub use data::{is_missing, DataMatrix, MISSING};
pub use error::{Error, Result};
pub use family::{
    categorical_descriptor, gaussian_descriptor, pareto_descriptor, FamilyDescriptor, FamilyId,
    FamilyRegistry, FitOptions, LeafFamily, ParamMap, ParamValue,
};
pub use graph::{
    generate_random_structure, structure_stats, validate, ColumnSpec, Context, Domain,
    GraphBuilder, Network, Node, NodeHandle, NodeId, Scope, StructureStats, ValidityReport,
    Violation, ViolationKind,
};
pub use infer::{log_likelihood, max_circuit_log_values, mpe, node_log_values};
pub use io::{from_json, parse_dsl, print_dsl, read_csv, read_csv_path, to_dot, to_json, write_csv};
pub use learn::{
    backprop_log_gradients, column_partition, fit_leaf_mle, learn_classifier, learn_structure,
    optimize_parameters, row_cluster, GradientVector, LearnHyperparams, OptimizeOptions,
    ParamLayout,
};
pub use rng::RandomSource;
pub use sample::{leaf_sample, sample};

/// Shared test fixtures: the two-mixture three-variable example network.
#[cfg(test)]
pub(crate) mod fixtures {
    use crate::family::ParamMap;
    use crate::graph::{GraphBuilder, Network, NodeHandle};

    pub fn cat(p: Vec<f64>) -> ParamMap {
        ParamMap::new().with_vector("p", p)
    }

    /// Flat construction: 8 leaves, 4 products, 2 sums (14 nodes).
    pub fn build_example_flat(builder: &mut GraphBuilder) -> NodeHandle {
        let c0a = builder.leaf("categorical", cat(vec![0.2, 0.8]), 0).unwrap();
        let c1a = builder.leaf("categorical", cat(vec![0.3, 0.7]), 1).unwrap();
        let c2a = builder.leaf("categorical", cat(vec![0.4, 0.6]), 2).unwrap();
        let c1b = builder.leaf("categorical", cat(vec![0.5, 0.5]), 1).unwrap();
        let c2b = builder.leaf("categorical", cat(vec![0.6, 0.4]), 2).unwrap();
        let p0 = builder.product(&[c1a, c2a]).unwrap();
        let p1 = builder.product(&[c1b, c2b]).unwrap();
        let s1 = builder.sum(&[p0, p1], &[0.3, 0.7]).unwrap();
        let left = builder.product(&[c0a, s1]).unwrap();
        let c0b = builder.leaf("categorical", cat(vec![0.2, 0.8]), 0).unwrap();
        let c1c = builder.leaf("categorical", cat(vec![0.3, 0.7]), 1).unwrap();
        let c2c = builder.leaf("categorical", cat(vec![0.4, 0.6]), 2).unwrap();
        let right = builder.product(&[c0b, c1c, c2c]).unwrap();
        builder.sum(&[left, right], &[0.4, 0.6]).unwrap()
    }

    /// Same distribution with the right branch as nested products
    /// (15 arena nodes pre-collapse).
    pub fn build_example_nested(builder: &mut GraphBuilder) -> NodeHandle {
        let c1a = builder.leaf("categorical", cat(vec![0.3, 0.7]), 1).unwrap();
        let c2a = builder.leaf("categorical", cat(vec![0.4, 0.6]), 2).unwrap();
        let p0 = builder.product(&[c1a, c2a]).unwrap();
        let c1b = builder.leaf("categorical", cat(vec![0.5, 0.5]), 1).unwrap();
        let c2b = builder.leaf("categorical", cat(vec![0.6, 0.4]), 2).unwrap();
        let p1 = builder.product(&[c1b, c2b]).unwrap();
        let s1 = builder.sum(&[p0, p1], &[0.3, 0.7]).unwrap();
        let c0a = builder.leaf("categorical", cat(vec![0.2, 0.8]), 0).unwrap();
        let p2 = builder.product(&[c0a, s1]).unwrap();
        let c0b = builder.leaf("categorical", cat(vec![0.2, 0.8]), 0).unwrap();
        let c1c = builder.leaf("categorical", cat(vec![0.3, 0.7]), 1).unwrap();
        let p3 = builder.product(&[c0b, c1c]).unwrap();
        let c2c = builder.leaf("categorical", cat(vec![0.4, 0.6]), 2).unwrap();
        let p4 = builder.product(&[p3, c2c]).unwrap();
        builder.sum(&[p2, p4], &[0.4, 0.6]).unwrap()
    }

    pub fn example_network() -> Network {
        let mut b = GraphBuilder::with_builtins();
        let root = build_example_flat(&mut b);
        b.finalize(root).unwrap()
    }

    /// Exact joint probability of (v0, v1, v2) by direct arithmetic,
    /// independent of the log-domain evaluator.
    pub fn example_joint(v0: usize, v1: usize, v2: usize) -> f64 {
        let c0 = [0.2, 0.8];
        let c1a = [0.3, 0.7];
        let c2a = [0.4, 0.6];
        let c1b = [0.5, 0.5];
        let c2b = [0.6, 0.4];
        let inner = 0.3 * c1a[v1] * c2a[v2] + 0.7 * c1b[v1] * c2b[v2];
        0.4 * c0[v0] * inner + 0.6 * c0[v0] * c1a[v1] * c2a[v2]
    }
}
