//! Per-vertex structural position vectors.
//!
//! Each vertex gets deterministic message-passing features (degree
//! statistics, clustering, eccentricity, plus mean/max neighborhood
//! aggregations of those), standardized and reduced to 4 dimensions with
//! PCA. The result plays the role of a learned graph embedding while
//! staying reproducible: relabeling the vertices permutes the rows
//! exactly, because every aggregation sums its inputs in value order.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use crate::graph::Graph;

pub const RAW_DIM: usize = 32;
pub const REDUCED_DIM: usize = 4;
const POWER_ITER_TOL: f64 = 1e-8;
const POWER_ITER_MAX: usize = 10_000;
const RANK_EPS: f64 = 1e-10;

/// 4-dimensional structural position per vertex, PCA-centered and
/// ordered by decreasing explained variance.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralEmbedding {
    features: Vec<[f64; REDUCED_DIM]>,
    /// Orthonormal component rows (zero rows where rank ran out).
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl StructuralEmbedding {
    pub fn n(&self) -> usize {
        self.features.len()
    }

    pub fn vector(&self, v: usize) -> [f64; REDUCED_DIM] {
        self.features[v]
    }

    pub fn rows(&self) -> &[[f64; REDUCED_DIM]] {
        &self.features
    }

    /// Cache format: JSON `{"vertex_id": [f1, f2, f3, f4], ...}`.
    pub fn to_cache_json(&self) -> String {
        let map: BTreeMap<String, [f64; REDUCED_DIM]> = self
            .features
            .iter()
            .enumerate()
            .map(|(v, f)| (v.to_string(), *f))
            .collect();
        serde_json::to_string(&map).expect("embedding serializes")
    }

    pub fn save_cache(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_cache_json())
    }

    pub fn from_cache_json(text: &str, n: usize) -> Option<Self> {
        let map: BTreeMap<String, [f64; REDUCED_DIM]> = serde_json::from_str(text).ok()?;
        let mut features = vec![[0.0; REDUCED_DIM]; n];
        if map.len() != n {
            return None;
        }
        for (key, val) in map {
            let v: usize = key.parse().ok()?;
            if v >= n {
                return None;
            }
            features[v] = val;
        }
        Some(StructuralEmbedding {
            features,
            components: Vec::new(),
            explained_variance: Vec::new(),
        })
    }
}

/// Sum that does not depend on input order: values are sorted by total
/// order first, so permutation-equivariant callers stay exact.
fn order_independent_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

fn neighbor_mean(g: &Graph, values: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    (0..g.n())
        .map(|v| {
            let nb = g.neighbors(v);
            if nb.is_empty() {
                return vec![0.0; dim];
            }
            (0..dim)
                .map(|i| {
                    let mut vals: Vec<f64> = nb.iter().map(|&u| values[u][i]).collect();
                    order_independent_sum(&mut vals) / nb.len() as f64
                })
                .collect()
        })
        .collect()
}

fn neighbor_max(g: &Graph, values: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    (0..g.n())
        .map(|v| {
            let nb = g.neighbors(v);
            if nb.is_empty() {
                return vec![0.0; dim];
            }
            (0..dim)
                .map(|i| {
                    nb.iter()
                        .map(|&u| values[u][i])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect()
        })
        .collect()
}

/// Deterministic message-passing features, one 32-vector per vertex:
/// six base features (degree, mean/min/max neighbor degree, clustering
/// coefficient, BFS eccentricity) followed by `rounds` rounds of mean
/// and max aggregation over neighborhoods, truncated or zero-padded to
/// 32 entries.
pub fn raw_structural_features(g: &Graph, rounds: usize) -> Vec<Vec<f64>> {
    let n = g.n();
    let adj_sets: Vec<HashSet<usize>> = (0..n)
        .map(|v| g.neighbors(v).iter().copied().collect())
        .collect();
    let base_dim = 6;
    let mut base: Vec<Vec<f64>> = Vec::with_capacity(n);
    for v in 0..n {
        let deg = g.degree(v);
        let nb = g.neighbors(v);
        let (mean_nd, min_nd, max_nd) = if nb.is_empty() {
            (0.0, 0.0, 0.0)
        } else {
            let degs: Vec<usize> = nb.iter().map(|&u| g.degree(u)).collect();
            let sum: usize = degs.iter().sum();
            (
                sum as f64 / degs.len() as f64,
                *degs.iter().min().unwrap() as f64,
                *degs.iter().max().unwrap() as f64,
            )
        };
        let clustering = if deg < 2 {
            0.0
        } else {
            let mut tri = 0usize;
            for i in 0..nb.len() {
                for j in (i + 1)..nb.len() {
                    if adj_sets[nb[i]].contains(&nb[j]) {
                        tri += 1;
                    }
                }
            }
            2.0 * tri as f64 / (deg * (deg - 1)) as f64
        };
        let ecc = g
            .bfs_distances(v)
            .into_iter()
            .filter(|&d| d != usize::MAX)
            .max()
            .unwrap_or(0) as f64;
        base.push(vec![
            deg as f64,
            mean_nd,
            min_nd,
            max_nd,
            clustering,
            ecc,
        ]);
    }

    let mut blocks: Vec<Vec<Vec<f64>>> = vec![base.clone()];
    let mut chain = base;
    for _ in 0..rounds {
        let mean_block = neighbor_mean(g, &chain, base_dim);
        let max_block = neighbor_max(g, &chain, base_dim);
        blocks.push(mean_block.clone());
        blocks.push(max_block);
        chain = mean_block;
    }

    (0..n)
        .map(|v| {
            let mut row = Vec::with_capacity(RAW_DIM);
            'outer: for block in &blocks {
                for &x in &block[v] {
                    if row.len() == RAW_DIM {
                        break 'outer;
                    }
                    row.push(x);
                }
            }
            row.resize(RAW_DIM, 0.0);
            row
        })
        .collect()
}

fn column_mean(raw: &[Vec<f64>], col: usize) -> f64 {
    let mut vals: Vec<f64> = raw.iter().map(|r| r[col]).collect();
    order_independent_sum(&mut vals) / raw.len() as f64
}

/// Center and scale each column to unit variance (PCA on the
/// correlation matrix; constant columns become zero).
fn standardize(raw: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = raw.len();
    let dim = raw[0].len();
    let mut out = vec![vec![0.0; dim]; n];
    for c in 0..dim {
        let mean = column_mean(raw, c);
        let mut sq: Vec<f64> = raw.iter().map(|r| (r[c] - mean) * (r[c] - mean)).collect();
        let var = order_independent_sum(&mut sq) / n as f64;
        let sd = var.sqrt();
        if sd > 1e-12 {
            for v in 0..n {
                out[v][c] = (raw[v][c] - mean) / sd;
            }
        }
    }
    out
}

fn mat_vec(mat: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    mat.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Leading eigenpair of a symmetric PSD matrix by power iteration.
fn leading_eigenpair(mat: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let dim = mat.len();
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 / (i + 1) as f64).collect();
    let nv = norm(&v);
    for x in &mut v {
        *x /= nv;
    }
    for _ in 0..POWER_ITER_MAX {
        let w = mat_vec(mat, &v);
        let wn = norm(&w);
        if wn < RANK_EPS {
            return (0.0, vec![0.0; dim]);
        }
        let next: Vec<f64> = w.iter().map(|x| x / wn).collect();
        let delta: f64 = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        v = next;
        if delta < POWER_ITER_TOL {
            break;
        }
    }
    let av = mat_vec(mat, &v);
    let lambda: f64 = av.iter().zip(&v).map(|(a, b)| a * b).sum();
    // canonical sign: largest-magnitude entry positive
    let pivot = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if v[pivot] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    (lambda.max(0.0), v)
}

/// Project standardized raw features onto the top-k principal
/// components (power iteration with deflation). Rank-deficient inputs
/// get zero columns so the output is always n x k.
pub fn pca_reduce(raw: &[Vec<f64>], k: usize) -> StructuralEmbedding {
    assert!(raw.len() >= 2, "PCA needs at least two rows");
    assert_eq!(k, REDUCED_DIM, "reduced dimension is fixed at 4");
    let x = standardize(raw);
    let n = x.len();
    let dim = x[0].len();
    let denom = (n - 1) as f64;
    let mut cov = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let mut prods: Vec<f64> = (0..n).map(|v| x[v][i] * x[v][j]).collect();
            let s = order_independent_sum(&mut prods) / denom;
            cov[i][j] = s;
            cov[j][i] = s;
        }
    }

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut explained = Vec::with_capacity(k);
    for _ in 0..k {
        let (lambda, vec) = leading_eigenpair(&cov);
        if lambda < RANK_EPS {
            components.push(vec![0.0; dim]);
            explained.push(0.0);
            continue;
        }
        // deflate: cov -= lambda * v v^T
        for i in 0..dim {
            for j in 0..dim {
                cov[i][j] -= lambda * vec[i] * vec[j];
            }
        }
        components.push(vec);
        explained.push(lambda);
    }

    let features: Vec<[f64; REDUCED_DIM]> = (0..n)
        .map(|v| {
            let mut row = [0.0; REDUCED_DIM];
            for (c, comp) in components.iter().enumerate() {
                row[c] = x[v].iter().zip(comp).map(|(a, b)| a * b).sum();
            }
            row
        })
        .collect();

    StructuralEmbedding {
        features,
        components,
        explained_variance: explained,
    }
}

/// The full per-instance embedding: raw features with 3 aggregation
/// rounds, reduced to 4 dimensions. Computed once per graph and cached
/// by callers.
pub fn structural_embedding(g: &Graph) -> StructuralEmbedding {
    pca_reduce(&raw_structural_features(g, 3), REDUCED_DIM)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{parse_edgelist, Graph};

    #[test]
    fn c6_rows_identical() {
        let g = parse_edgelist("0 1\n1 2\n2 3\n3 4\n4 5\n5 0").unwrap();
        let raw = raw_structural_features(&g, 3);
        for row in &raw[1..] {
            assert_eq!(row, &raw[0], "vertex-transitive graph must have equal rows");
        }
    }

    #[test]
    fn star_center_differs_from_leaf() {
        // K_{1,5} plus an edge between two leaves
        let g = parse_edgelist("0 1\n0 2\n0 3\n0 4\n0 5\n1 2").unwrap();
        let raw = raw_structural_features(&g, 2);
        assert!(raw[0][0] > raw[3][0], "center degree must dominate leaf degree");
    }

    #[test]
    fn relabeling_permutes_rows_exactly() {
        use rand::seq::SliceRandom;
        use rand_chacha::rand_core::SeedableRng;
        let g = crate::graph::generate_chorded_cycle(16, 9, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut perm: Vec<usize> = (0..g.n()).collect();
        perm.shuffle(&mut rng);
        let edges: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .map(|&(u, v)| (perm[u].min(perm[v]), perm[u].max(perm[v])))
            .collect();
        let h = Graph::from_edges(g.n(), edges).unwrap();

        let raw_g = raw_structural_features(&g, 3);
        let raw_h = raw_structural_features(&h, 3);
        for v in 0..g.n() {
            assert_eq!(raw_g[v], raw_h[perm[v]], "raw features must permute exactly");
        }

        let emb_g = pca_reduce(&raw_g, REDUCED_DIM);
        let emb_h = pca_reduce(&raw_h, REDUCED_DIM);
        for v in 0..g.n() {
            assert_eq!(
                emb_g.vector(v),
                emb_h.vector(perm[v]),
                "embedding must permute exactly"
            );
        }
    }

    #[test]
    fn rank1_input_zeroes_trailing_components() {
        // rows are multiples of one pattern
        let base: Vec<f64> = (0..RAW_DIM).map(|i| (i as f64 * 0.37).sin()).collect();
        let raw: Vec<Vec<f64>> = (0..6)
            .map(|r| base.iter().map(|x| x * (r as f64 + 1.0)).collect())
            .collect();
        let emb = pca_reduce(&raw, REDUCED_DIM);
        for v in 0..6 {
            let row = emb.vector(v);
            for c in 1..REDUCED_DIM {
                assert!(
                    row[c].abs() < 1e-6,
                    "component {c} should be zero, got {}",
                    row[c]
                );
            }
        }
        assert!(emb.explained_variance[1] < 1e-8);
    }

    #[test]
    fn two_clusters_separated_by_first_component() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut raw = Vec::new();
        for cluster in 0..2 {
            let shift = if cluster == 0 { -4.0 } else { 4.0 };
            for _ in 0..12 {
                let row: Vec<f64> = (0..RAW_DIM)
                    .map(|i| {
                        let noise: f64 = rng.random_range(-0.5..0.5);
                        if i < 8 {
                            shift + noise
                        } else {
                            noise
                        }
                    })
                    .collect();
                raw.push(row);
            }
        }
        let emb = pca_reduce(&raw, REDUCED_DIM);
        let scores: Vec<f64> = (0..24).map(|v| emb.vector(v)[0]).collect();
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let (a, b) = scores.split_at(12);
        let (ma, mb) = (mean(a), mean(b));
        let within: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum::<f64>()
            + b.iter().map(|x| (x - mb) * (x - mb)).sum::<f64>();
        let overall = mean(&scores);
        let between = 12.0 * ((ma - overall).powi(2) + (mb - overall).powi(2));
        assert!(
            within < between,
            "component 1 must separate the clusters (within={within}, between={between})"
        );
    }

    #[test]
    fn reconstruction_matches_full_eigendecomposition_oracle() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let raw: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..RAW_DIM).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let emb = pca_reduce(&raw, REDUCED_DIM);
        let x = standardize(&raw);

        // reconstruction error with our components
        let err = reconstruction_error(&x, &emb.components);

        // oracle: full eigendecomposition of the covariance
        let n = x.len();
        let mut cov = nalgebra::DMatrix::<f64>::zeros(RAW_DIM, RAW_DIM);
        for i in 0..RAW_DIM {
            for j in 0..RAW_DIM {
                let s: f64 = (0..n).map(|v| x[v][i] * x[v][j]).sum();
                cov[(i, j)] = s / (n - 1) as f64;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(cov);
        let mut pairs: Vec<(f64, Vec<f64>)> = (0..RAW_DIM)
            .map(|c| {
                (
                    eig.eigenvalues[c],
                    (0..RAW_DIM).map(|r| eig.eigenvectors[(r, c)]).collect(),
                )
            })
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let oracle_components: Vec<Vec<f64>> =
            pairs.iter().take(REDUCED_DIM).map(|p| p.1.clone()).collect();
        let oracle_err = reconstruction_error(&x, &oracle_components);
        assert!(
            err <= oracle_err + 1e-6,
            "our projection (err={err}) must match the optimal (err={oracle_err})"
        );

        // any other projection does no better than ours
        for seed in 0..5u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100 + seed);
            let random_basis = random_orthonormal(&mut rng);
            let other = reconstruction_error(&x, &random_basis);
            assert!(err <= other + 1e-9);
        }
    }

    fn reconstruction_error(x: &[Vec<f64>], components: &[Vec<f64>]) -> f64 {
        let mut err = 0.0;
        for row in x {
            let mut recon = vec![0.0; row.len()];
            for comp in components {
                let score: f64 = row.iter().zip(comp).map(|(a, b)| a * b).sum();
                for (r, c) in recon.iter_mut().zip(comp) {
                    *r += score * c;
                }
            }
            err += row
                .iter()
                .zip(&recon)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        err
    }

    fn random_orthonormal(rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Vec<f64>> {
        use rand::Rng;
        // Gram-Schmidt on random vectors
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while basis.len() < REDUCED_DIM {
            let mut v: Vec<f64> = (0..RAW_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (x, c) in v.iter_mut().zip(b) {
                    *x -= dot * c;
                }
            }
            let nv = norm(&v);
            if nv > 1e-6 {
                for x in &mut v {
                    *x /= nv;
                }
                basis.push(v);
            }
        }
        basis
    }

    #[test]
    fn components_orthonormal_and_features_centered() {
        let g = crate::graph::generate_chorded_cycle(18, 12, 8);
        let emb = structural_embedding(&g);
        for (i, a) in emb.components.iter().enumerate() {
            if emb.explained_variance[i] == 0.0 {
                continue;
            }
            for (j, b) in emb.components.iter().enumerate() {
                if emb.explained_variance[j] == 0.0 {
                    continue;
                }
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (dot - expected).abs() < 1e-6,
                    "components {i},{j} dot {dot}"
                );
            }
        }
        for c in 0..REDUCED_DIM {
            let mean: f64 =
                (0..g.n()).map(|v| emb.vector(v)[c]).sum::<f64>() / g.n() as f64;
            assert!(mean.abs() < 1e-9, "component {c} mean {mean}");
        }
        let ev = &emb.explained_variance;
        for w in ev.windows(2) {
            assert!(w[0] >= w[1] - 1e-12, "variance must be nonincreasing");
        }
    }

    #[test]
    fn repeated_calls_are_identical() {
        let g = crate::graph::generate_chorded_cycle(14, 7, 2);
        let e1 = structural_embedding(&g);
        let e2 = structural_embedding(&g);
        assert_eq!(e1, e2);
    }

    #[test]
    fn cache_round_trip() {
        let g = crate::graph::generate_chorded_cycle(10, 4, 1);
        let emb = structural_embedding(&g);
        let text = emb.to_cache_json();
        let back = StructuralEmbedding::from_cache_json(&text, g.n()).unwrap();
        for v in 0..g.n() {
            assert_eq!(emb.vector(v), back.vector(v));
        }
    }
}
