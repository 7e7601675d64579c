//! Community and distance features on top of subgraph embeddings.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{euclidean, Matrix};
use crate::seeding::{stage, stream_rng};

pub const DEFAULT_TAU: f64 = 1.25;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Default community count for `n` nodes.
pub fn default_k(n: usize) -> usize {
    ((n as f64 / 2.0).sqrt().round() as usize)
        .max(2)
        .min(n.max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityAssignment {
    pub centroids: Matrix,
    /// Community ids of every node, ascending.
    pub membership: Vec<Vec<usize>>,
}

impl CommunityAssignment {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for m in &self.membership {
            for &c in m {
                sizes[c] += 1;
            }
        }
        sizes
    }

    /// `node_id,community_ids` with ids joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,community_ids\n");
        for (v, m) in self.membership.iter().enumerate() {
            let ids: Vec<String> = m.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("{v},{}\n", ids.join(";")));
        }
        out
    }
}

/// Index of the nearest centroid, lowest index on ties.
fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter_rows().enumerate() {
        let d = euclidean(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_plus_plus<R: Rng + ?Sized>(points: &Matrix, k: usize, rng: &mut R) -> Matrix {
    let n = points.rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut closest: Vec<f64> = (0..n)
        .map(|i| sq(euclidean(points.row(i), points.row(chosen[0]))))
        .collect();
    while chosen.len() < k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in closest.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // all points coincide with a centroid already
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, c) in closest.iter_mut().enumerate() {
            *c = c.min(sq(euclidean(points.row(i), points.row(next))));
        }
    }
    let rows: Vec<Vec<f64>> = chosen.iter().map(|&i| points.row(i).to_vec()).collect();
    Matrix::from_rows(&rows)
}

fn sq(x: f64) -> f64 {
    x * x
}

/// Result of Lloyd's iterations before overlap extension.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub centroids: Matrix,
    pub labels: Vec<usize>,
    /// Within-cluster SSE after every assignment step.
    pub sse_trace: Vec<f64>,
}

/// Lloyd's iterations from explicit initial centroids.
pub fn lloyd(points: &Matrix, initial: Matrix, max_iter: usize) -> LloydRun {
    let (n, dim, k) = (points.rows(), points.cols(), initial.rows());
    let mut centroids = initial;
    let mut labels: Vec<usize> = vec![usize::MAX; n];
    let mut sse_trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        let assigned: Vec<usize> = (0..n)
            .map(|i| nearest(points.row(i), &centroids).0)
            .collect();
        let changed = assigned != labels;
        labels = assigned;
        sse_trace.push(sse(points, &centroids, &labels));
        if !changed {
            break;
        }
        let mut sums = Matrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            counts[c] += 1;
            for (s, &x) in sums.row_mut(c).iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, &s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = euclidean(points.row(a), centroids.row(labels[a]));
                        let db = euclidean(points.row(b), centroids.row(labels[b]));
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("non-empty input");
                let old = labels[far];
                counts[old] -= 1;
                counts[c] = 1;
                labels[far] = c;
                centroids.row_mut(c).copy_from_slice(points.row(far));
            }
        }
    }
    LloydRun {
        centroids,
        labels,
        sse_trace,
    }
}

fn sse(points: &Matrix, centroids: &Matrix, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| sq(euclidean(points.row(i), centroids.row(c))))
        .sum()
}

/// K-means with k-means++ seeding, followed by overlap extension with `tau`.
pub fn kmeans(
    points: &Matrix,
    k: usize,
    max_iter: usize,
    seed: u64,
    tau: f64,
) -> Result<CommunityAssignment> {
    let n = points.rows();
    if n == 0 {
        return Err(Error::invalid("k-means needs at least one point"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k-means with K={k} on {n} points")));
    }
    if max_iter == 0 {
        return Err(Error::invalid("k-means needs max_iter >= 1"));
    }
    if !points.is_finite() {
        return Err(Error::NonFinite("k-means input".into()));
    }
    let mut rng = stream_rng(seed, &[stage::KMEANS]);
    let initial = kmeans_plus_plus(points, k, &mut rng);
    let run = lloyd(points, initial, max_iter);
    let hard = CommunityAssignment {
        membership: run.labels.iter().map(|&c| vec![c]).collect(),
        centroids: run.centroids,
    };
    overlap_extend(points, &hard, tau)
}

/// Adds every community whose centroid is within `tau` times the distance to
/// the node's nearest centroid.
pub fn overlap_extend(
    points: &Matrix,
    assignment: &CommunityAssignment,
    tau: f64,
) -> Result<CommunityAssignment> {
    if !(tau >= 1.0) || !tau.is_finite() {
        return Err(Error::invalid(format!(
            "overlap tau must be >= 1, got {tau}"
        )));
    }
    let membership = (0..points.rows())
        .map(|i| {
            let dists: Vec<f64> = assignment
                .centroids
                .iter_rows()
                .map(|c| euclidean(points.row(i), c))
                .collect();
            let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
            let mut m: Vec<usize> = (0..dists.len())
                .filter(|&c| dists[c] <= tau * min)
                .collect();
            for &c in &assignment.membership[i] {
                if !m.contains(&c) {
                    m.push(c);
                }
            }
            m.sort_unstable();
            m
        })
        .collect();
    Ok(CommunityAssignment {
        centroids: assignment.centroids.clone(),
        membership,
    })
}

/// Per node: mean size of its communities and the number of communities.
pub fn community_features(assignment: &CommunityAssignment) -> Vec<(f64, usize)> {
    let sizes = assignment.sizes();
    assignment
        .membership
        .iter()
        .map(|m| {
            let total: usize = m.iter().map(|&c| sizes[c]).sum();
            (total as f64 / m.len() as f64, m.len())
        })
        .collect()
}

/// Pairwise Euclidean distances between embedding rows.
pub fn distance_embedding(embeddings: &Matrix) -> Matrix {
    let n = embeddings.rows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|u| {
            (0..n)
                .map(|v| {
                    if u == v {
                        0.0
                    } else {
                        euclidean(embeddings.row(u), embeddings.row(v))
                    }
                })
                .collect()
        })
        .collect();
    Matrix::from_vec(n, n, rows.concat())
}

/// Zero-mean unit-variance copy; constant inputs map to zeros.
pub fn standardize(values: &[f64]) -> Vec<f64> {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| sq(x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= 1e-12 * mean.abs().max(1.0) {
        vec![0.0; values.len()]
    } else {
        values.iter().map(|x| (x - mean) / std).collect()
    }
}

/// Final embedding rows `[csize, coverlap, dist[v][..]]`, scalars standardized.
pub fn concat_embedding(features: &[(f64, usize)], distances: &Matrix) -> Result<Matrix> {
    let n = features.len();
    if distances.rows() != n || distances.cols() != n {
        return Err(Error::Shape(format!(
            "{} community rows against a {}x{} distance matrix",
            n,
            distances.rows(),
            distances.cols()
        )));
    }
    let csize = standardize(&features.iter().map(|f| f.0).collect::<Vec<_>>());
    let coverlap = standardize(&features.iter().map(|f| f.1 as f64).collect::<Vec<_>>());
    let mut out = Matrix::zeros(n, n + 2);
    for v in 0..n {
        let row = out.row_mut(v);
        row[0] = csize[v];
        row[1] = coverlap[v];
        row[2..].copy_from_slice(distances.row(v));
    }
    Ok(out)
}

/// Gradient with respect to the embeddings given the gradient with respect to
/// the distance matrix. Coincident pairs contribute nothing.
pub fn distance_backward(embeddings: &Matrix, distances: &Matrix, grad_dist: &Matrix) -> Matrix {
    let (n, dim) = (embeddings.rows(), embeddings.cols());
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut g = vec![0.0; dim];
            for v in 0..n {
                let d = distances.get(u, v);
                if u == v || d == 0.0 {
                    continue;
                }
                let coef = (grad_dist.get(u, v) + grad_dist.get(v, u)) / d;
                if coef != 0.0 {
                    for ((gk, &a), &b) in g.iter_mut().zip(embeddings.row(u)).zip(embeddings.row(v))
                    {
                        *gk += coef * (a - b);
                    }
                }
            }
            g
        })
        .collect();
    Matrix::from_vec(n, dim, rows.concat())
}
