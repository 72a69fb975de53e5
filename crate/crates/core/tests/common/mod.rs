//! Shared helpers for the integration suites: the example network in both
//! construction orders, a direct-arithmetic probability oracle, and C
//! toolchain plumbing for the codegen equivalence checks.

#![allow(dead_code)]

use std::sync::Arc;

use spn_core::{
    FamilyRegistry, GraphBuilder, Network, Node, NodeHandle, NodeId, ParamMap, RandomSource,
};

pub fn builtins() -> Arc<FamilyRegistry> {
    Arc::new(FamilyRegistry::with_builtins())
}

pub fn cat(p: Vec<f64>) -> ParamMap {
    ParamMap::new().with_vector("p", p)
}

/// Flat construction of the three-variable example: 8 leaves, 4 products,
/// 2 sums.
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

/// Same distribution built with nested products on the right branch
/// (15 arena nodes before finalization collapses them to 14).
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

const LN_2PI: f64 = 1.8378770664093453;

/// Direct-arithmetic probability of a row, recursing over the graph in
/// the linear (not log) domain. Independent of the engine's log-domain
/// evaluator; missing cells contribute probability 1.
pub fn direct_probability(network: &Network, row: &[f64]) -> f64 {
    fn eval(network: &Network, id: NodeId, row: &[f64]) -> f64 {
        match network.node(id) {
            Node::Sum { children, weights } => children
                .iter()
                .zip(weights)
                .map(|(c, w)| w * eval(network, *c, row))
                .sum(),
            Node::Product { children } => {
                children.iter().map(|c| eval(network, *c, row)).product()
            }
            Node::Leaf {
                params, scope_var, ..
            } => {
                let v = row[*scope_var];
                if v.is_nan() {
                    return 1.0;
                }
                let family = network.family(id).unwrap().name().to_string();
                match family.as_str() {
                    "categorical" => params.vector("p").unwrap()[v as usize],
                    "gaussian" => {
                        let mean = params.scalar("mean").unwrap();
                        let std = params.scalar("stdev").unwrap();
                        let z = (v - mean) / std;
                        (-0.5 * z * z - std.ln() - 0.5 * LN_2PI).exp()
                    }
                    "pareto" => {
                        let a = params.scalar("a").unwrap();
                        if v < 1.0 {
                            0.0
                        } else {
                            a * v.powf(-(a + 1.0))
                        }
                    }
                    other => panic!("oracle does not know family '{other}'"),
                }
            }
        }
    }
    eval(network, network.root(), row)
}

/// Per-variable categorical cardinalities of an all-discrete network
/// (largest pmf over each variable's leaves).
pub fn discrete_cardinalities(network: &Network) -> Vec<usize> {
    let mut cards = vec![0usize; network.num_vars()];
    for (id, node) in network.nodes() {
        if let Node::Leaf {
            params, scope_var, ..
        } = node
        {
            assert_eq!(
                network.family(id).unwrap().name(),
                "categorical",
                "enumeration needs an all-discrete network"
            );
            let k = params.vector("p").unwrap().len();
            cards[*scope_var] = cards[*scope_var].max(k);
        }
    }
    cards
}

/// Every complete configuration of an all-discrete network.
pub fn enumerate_configs(network: &Network) -> Vec<Vec<f64>> {
    let cards = discrete_cardinalities(network);
    let mut configs: Vec<Vec<f64>> = vec![Vec::new()];
    for &k in &cards {
        let mut next = Vec::with_capacity(configs.len() * k);
        for config in &configs {
            for v in 0..k {
                let mut c = config.clone();
                c.push(v as f64);
                next.push(c);
            }
        }
        configs = next;
    }
    configs
}

/// Locate a C99 compiler, if any.
pub fn find_c_compiler() -> Option<&'static str> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc)
            .arg("--version")
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
        {
            return Some(cc);
        }
    }
    None
}

/// Random query rows for equivalence tests: in-domain values with a 30%
/// missing rate. `domains[i]` gives (cardinality, lo, hi); cardinality 0
/// means continuous.
pub fn random_query_rows(
    domains: &[(usize, f64, f64)],
    rows: usize,
    rng: &mut RandomSource,
) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            domains
                .iter()
                .map(|&(k, lo, hi)| {
                    if rng.uniform() < 0.3 {
                        f64::NAN
                    } else if k > 0 {
                        rng.below(k) as f64
                    } else {
                        lo + rng.uniform() * (hi - lo)
                    }
                })
                .collect()
        })
        .collect()
}
