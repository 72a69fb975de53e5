//! Seeded k-means row clustering for sum-node splits.

use crate::data::DataMatrix;
use crate::graph::{Context, Domain};
use crate::rng::RandomSource;

const MAX_ITERATIONS: usize = 100;
const RESTARTS: usize = 3;

/// Partition `rows` into at most `k` clusters by k-means over z-scored
/// continuous columns and one-hot encoded categorical columns. Runs three
/// seeded restarts and keeps the lowest-inertia result; deterministic
/// given the seed. Empty clusters are dropped, so fewer than `k` groups
/// may come back.
pub fn row_cluster(
    data: &DataMatrix,
    rows: &[usize],
    cols: &[usize],
    context: &Context,
    k: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let n = rows.len();
    if n == 0 {
        return Vec::new();
    }
    if n <= k {
        // not enough rows to separate; callers treat one cluster as
        // "no split found"
        return vec![rows.to_vec()];
    }

    let features = encode(data, rows, cols, context);
    let dim = features.len() / n;

    let mut rng = RandomSource::new(seed);
    let mut best_assign: Option<Vec<usize>> = None;
    let mut best_inertia = f64::INFINITY;

    for _ in 0..RESTARTS {
        let (assign, inertia) = lloyd(&features, n, dim, k, &mut rng);
        if inertia < best_inertia {
            best_inertia = inertia;
            best_assign = Some(assign);
        }
    }

    let assign = best_assign.expect("at least one restart ran");
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in assign.iter().enumerate() {
        clusters[c].push(rows[i]);
    }
    clusters.retain(|c| !c.is_empty());
    clusters
}

/// Row-major feature matrix: z-scored numeric columns, one-hot
/// categoricals.
fn encode(data: &DataMatrix, rows: &[usize], cols: &[usize], context: &Context) -> Vec<f64> {
    let n = rows.len();
    let mut feature_cols: Vec<Vec<f64>> = Vec::new();
    for &col in cols {
        match context.column(col).domain() {
            Domain::Numeric { .. } => {
                let values: Vec<f64> = rows.iter().map(|&r| data.get(r, col)).collect();
                let mean = values.iter().sum::<f64>() / n as f64;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                let std = var.sqrt();
                if std > 0.0 {
                    feature_cols.push(values.iter().map(|v| (v - mean) / std).collect());
                } else {
                    feature_cols.push(vec![0.0; n]);
                }
            }
            Domain::Categorical { cardinality } => {
                for cat in 0..*cardinality {
                    feature_cols.push(
                        rows.iter()
                            .map(|&r| if data.get(r, col) == cat as f64 { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
        }
    }
    let dim = feature_cols.len();
    let mut out = vec![0.0; n * dim];
    for (j, col) in feature_cols.iter().enumerate() {
        for i in 0..n {
            out[i * dim + j] = col[i];
        }
    }
    out
}

fn lloyd(
    features: &[f64],
    n: usize,
    dim: usize,
    k: usize,
    rng: &mut RandomSource,
) -> (Vec<usize>, f64) {
    // Forgy init: k distinct rows as starting centroids
    let mut picks: Vec<usize> = Vec::with_capacity(k);
    while picks.len() < k {
        let candidate = rng.below(n);
        if !picks.contains(&candidate) {
            picks.push(candidate);
        }
    }
    let mut centroids: Vec<f64> = Vec::with_capacity(k * dim);
    for &p in &picks {
        centroids.extend_from_slice(&features[p * dim..(p + 1) * dim]);
    }

    let mut assign = vec![0usize; n];
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        for i in 0..n {
            let row = &features[i * dim..(i + 1) * dim];
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let centroid = &centroids[c * dim..(c + 1) * dim];
                let d: f64 = row
                    .iter()
                    .zip(centroid)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        // recompute centroids; empty clusters keep their previous position
        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assign[i];
            counts[c] += 1;
            for j in 0..dim {
                sums[c * dim + j] += features[i * dim + j];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..dim {
                    centroids[c * dim + j] = sums[c * dim + j] / counts[c] as f64;
                }
            }
        }
    }

    let inertia: f64 = (0..n)
        .map(|i| {
            let row = &features[i * dim..(i + 1) * dim];
            let centroid = assign[i] * dim;
            row.iter()
                .zip(&centroids[centroid..centroid + dim])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    (assign, inertia)
}
