//! Pairwise dependence scoring and column grouping for product-node
//! splits.
//!
//! Scores lie in [0, 1]: normalized mutual information for
//! discrete-discrete pairs, |Pearson r| for continuous-continuous pairs
//! and the correlation ratio for mixed pairs. Columns joined by an edge
//! (score strictly above the threshold) end up in the same group.

use crate::data::DataMatrix;
use crate::graph::{Context, Domain};

/// Group `cols` into connected components of the dependence graph.
/// Components come back sorted by their smallest column index, columns
/// sorted within each component.
pub fn column_partition(
    data: &DataMatrix,
    rows: &[usize],
    cols: &[usize],
    context: &Context,
    threshold: f64,
) -> Vec<Vec<usize>> {
    let m = cols.len();
    if m <= 1 {
        return vec![cols.to_vec()];
    }
    // union-find over column positions
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let score = dependence_score(data, rows, cols[i], cols[j], context);
            if score > threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..m {
        let r = find(&mut parent, i);
        groups[r].push(cols[i]);
    }
    groups.retain(|g| !g.is_empty());
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    groups
}

/// Dependence in [0, 1] between two columns over the given rows.
pub(crate) fn dependence_score(
    data: &DataMatrix,
    rows: &[usize],
    col_a: usize,
    col_b: usize,
    context: &Context,
) -> f64 {
    let a = data.column_subset(rows, col_a);
    let b = data.column_subset(rows, col_b);
    match (
        context.column(col_a).domain().clone(),
        context.column(col_b).domain().clone(),
    ) {
        (Domain::Categorical { cardinality: ka }, Domain::Categorical { cardinality: kb }) => {
            normalized_mutual_information(&a, &b, ka, kb)
        }
        (Domain::Numeric { .. }, Domain::Numeric { .. }) => pearson_abs(&a, &b),
        (Domain::Categorical { cardinality }, Domain::Numeric { .. }) => {
            correlation_ratio(&a, &b, cardinality)
        }
        (Domain::Numeric { .. }, Domain::Categorical { cardinality }) => {
            correlation_ratio(&b, &a, cardinality)
        }
    }
}

/// MI(X, Y) / sqrt(H(X) H(Y)), zero when either entropy vanishes.
fn normalized_mutual_information(a: &[f64], b: &[f64], ka: usize, kb: usize) -> f64 {
    let n = a.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mut joint = vec![0.0f64; ka * kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[(x as usize) * kb + y as usize] += 1.0;
    }
    let mut pa = vec![0.0f64; ka];
    let mut pb = vec![0.0f64; kb];
    for i in 0..ka {
        for j in 0..kb {
            joint[i * kb + j] /= n;
            pa[i] += joint[i * kb + j];
            pb[j] += joint[i * kb + j];
        }
    }
    let entropy = |p: &[f64]| -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>();
    let (ha, hb) = (entropy(&pa), entropy(&pb));
    if ha <= 0.0 || hb <= 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let pij = joint[i * kb + j];
            if pij > 0.0 {
                mi += pij * (pij / (pa[i] * pb[j])).ln();
            }
        }
    }
    (mi / (ha * hb).sqrt()).clamp(0.0, 1.0)
}

fn pearson_abs(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    (cov / (va * vb).sqrt()).abs().clamp(0.0, 1.0)
}

/// Correlation ratio of a continuous column grouped by a discrete one:
/// sqrt of between-group over total sum of squares.
fn correlation_ratio(discrete: &[f64], continuous: &[f64], cardinality: usize) -> f64 {
    let n = continuous.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let grand = continuous.iter().sum::<f64>() / n;
    let mut group_sum = vec![0.0f64; cardinality];
    let mut group_count = vec![0.0f64; cardinality];
    for (&g, &x) in discrete.iter().zip(continuous) {
        group_sum[g as usize] += x;
        group_count[g as usize] += 1.0;
    }
    let mut between = 0.0;
    for g in 0..cardinality {
        if group_count[g] > 0.0 {
            let mean = group_sum[g] / group_count[g];
            between += group_count[g] * (mean - grand) * (mean - grand);
        }
    }
    let total: f64 = continuous.iter().map(|x| (x - grand) * (x - grand)).sum();
    if total <= 0.0 {
        return 0.0;
    }
    (between / total).sqrt().clamp(0.0, 1.0)
}
