//! Local influence embedding of ego subgraphs.
//!
//! Each GLAIN layer mixes a node's own state with the degree-normalized sum
//! of its neighbours' states:
//!
//! ```text
//! d_v  = sigmoid(w_d . h_v + b_d)
//! h_v' = sigmoid(d_v * sum_{u in N(v)} h_u / |N(u)| + (1 - d_v) * h_v)
//! ```
//!
//! Neighbourhoods and degrees are taken inside the flattened subgraph. After
//! the last layer the node states are pooled with weights equal to the
//! number of shortest paths through each node; when no node lies inside any
//! shortest path the pool falls back to the mean.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{dot, sigmoid, Matrix};
use crate::multiplex::MultilayerNetwork;
use crate::paths::shortest_path_counts;
use crate::sampler::EgoInfSubgraph;

pub const DEFAULT_DIM: usize = 32;
pub const DEFAULT_LAYERS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct GlainParams {
    /// Structural feature to embedding projection, `feature_dim x dim`.
    pub input_proj: Matrix,
    pub damping_weight: Vec<f64>,
    pub damping_bias: f64,
    pub layers: usize,
}

impl GlainParams {
    pub fn init<R: Rng + ?Sized>(
        feature_dim: usize,
        dim: usize,
        layers: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            input_proj: Matrix::random_normal(
                feature_dim,
                dim,
                1.0 / (feature_dim as f64).sqrt(),
                rng,
            ),
            damping_weight: Matrix::random_normal(1, dim, 1.0 / (dim as f64).sqrt(), rng)
                .as_slice()
                .to_vec(),
            damping_bias: 0.0,
            layers,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.input_proj.rows()
    }

    pub fn dim(&self) -> usize {
        self.input_proj.cols()
    }

    pub fn zeros_like(&self) -> GlainGrads {
        GlainGrads {
            input_proj: Matrix::zeros(self.feature_dim(), self.dim()),
            damping_weight: vec![0.0; self.dim()],
            damping_bias: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.input_proj.is_finite()
            && self.damping_weight.iter().all(|x| x.is_finite())
            && self.damping_bias.is_finite()
    }

    pub fn apply(&mut self, grads: &GlainGrads, lr: f64) {
        self.input_proj.add_scaled(&grads.input_proj, -lr);
        for (w, g) in self.damping_weight.iter_mut().zip(&grads.damping_weight) {
            *w -= lr * g;
        }
        self.damping_bias -= lr * grads.damping_bias;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlainGrads {
    pub input_proj: Matrix,
    pub damping_weight: Vec<f64>,
    pub damping_bias: f64,
}

impl GlainGrads {
    fn accumulate(&mut self, other: &GlainGrads) {
        self.input_proj.add_scaled(&other.input_proj, 1.0);
        for (a, b) in self.damping_weight.iter_mut().zip(&other.damping_weight) {
            *a += b;
        }
        self.damping_bias += other.damping_bias;
    }
}

/// Length of the structural feature vector for a network with `layers` layers.
pub fn feature_dim(layers: usize) -> usize {
    layers + 2
}

/// Raw structural features of every node: per-layer degree over the layer's
/// maximum degree, then the given size ratio, then a constant 1.
fn node_features(net: &MultilayerNetwork, v: usize, size_ratio: f64) -> Vec<f64> {
    let mut f: Vec<f64> = net
        .layers()
        .iter()
        .map(|layer| {
            let max = layer.max_degree();
            if max == 0 {
                0.0
            } else {
                layer.degree(v) as f64 / max as f64
            }
        })
        .collect();
    f.push(size_ratio);
    f.push(1.0);
    f
}

/// Structural feature vector of each root, with `|A(v)| / n` from its subgraph.
pub fn root_features(net: &MultilayerNetwork, subgraphs: &[EgoInfSubgraph]) -> Matrix {
    let n = net.node_count() as f64;
    let rows: Vec<Vec<f64>> = subgraphs
        .iter()
        .map(|s| node_features(net, s.root, s.len() as f64 / n))
        .collect();
    Matrix::from_rows(&rows)
}

/// Parameter-free data of one subgraph, computed once.
#[derive(Debug, Clone)]
pub struct SubgraphContext {
    pub adjacency: Vec<Vec<usize>>,
    /// Structural features, one row per subgraph node.
    pub features: Matrix,
    /// Readout weight per node (path counts, or `1/len` for the mean fallback).
    pub readout_weights: Vec<f64>,
    /// Raw shortest-path counts.
    pub path_counts: Vec<u64>,
}

impl SubgraphContext {
    pub fn new(sub: &EgoInfSubgraph, net: &MultilayerNetwork) -> Self {
        let adjacency = sub.local_adjacency();
        let size_ratio = sub.len() as f64 / net.node_count() as f64;
        let rows: Vec<Vec<f64>> = sub
            .nodes
            .iter()
            .map(|&v| node_features(net, v, size_ratio))
            .collect();
        let path_counts = shortest_path_counts(&adjacency);
        let readout_weights = readout_weights(&path_counts);
        Self {
            features: Matrix::from_rows(&rows),
            adjacency,
            readout_weights,
            path_counts,
        }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }
}

fn readout_weights(path_counts: &[u64]) -> Vec<f64> {
    if path_counts.iter().all(|&c| c == 0) {
        let len = path_counts.len().max(1) as f64;
        vec![1.0 / len; path_counts.len()]
    } else {
        path_counts.iter().map(|&c| c as f64).collect()
    }
}

pub fn prepare_contexts(
    subgraphs: &[EgoInfSubgraph],
    net: &MultilayerNetwork,
) -> Vec<SubgraphContext> {
    subgraphs
        .par_iter()
        .map(|s| SubgraphContext::new(s, net))
        .collect()
}

/// Divides every readout weight by the largest per-subgraph weight total, so
/// pooled states stay on a unit scale while keeping their relative sizes.
/// Returns the divisor.
pub fn scale_readout(contexts: &mut [SubgraphContext]) -> f64 {
    let max = contexts
        .iter()
        .map(|c| c.readout_weights.iter().sum::<f64>())
        .fold(0.0, f64::max);
    if max > 0.0 {
        for c in contexts.iter_mut() {
            c.readout_weights.iter_mut().for_each(|w| *w /= max);
        }
        max
    } else {
        1.0
    }
}

/// Initial node states: structural features times `input_proj`.
pub fn init_features(ctx: &SubgraphContext, params: &GlainParams) -> Matrix {
    let (rows, dim) = (ctx.len(), params.dim());
    let mut h = Matrix::zeros(rows, dim);
    for r in 0..rows {
        let feats = ctx.features.row(r);
        let out = h.row_mut(r);
        for (f, &x) in feats.iter().enumerate() {
            if x != 0.0 {
                for (o, &p) in out.iter_mut().zip(params.input_proj.row(f)) {
                    *o += x * p;
                }
            }
        }
    }
    h
}

/// Adaptive damping factor of one node state, strictly inside (0, 1).
pub fn damping(h_v: &[f64], params: &GlainParams) -> f64 {
    sigmoid(dot(&params.damping_weight, h_v) + params.damping_bias)
}

/// Degree-normalized neighbour sum for every node.
fn neighbor_messages(adjacency: &[Vec<usize>], h: &Matrix) -> Matrix {
    let mut m = Matrix::zeros(h.rows(), h.cols());
    for (v, nbrs) in adjacency.iter().enumerate() {
        let out = m.row_mut(v);
        for &u in nbrs {
            let scale = 1.0 / adjacency[u].len() as f64;
            for (o, &x) in out.iter_mut().zip(h.row(u)) {
                *o += scale * x;
            }
        }
    }
    m
}

/// One GLAIN update with given damping factors.
pub fn glain_update(adjacency: &[Vec<usize>], h: &Matrix, damp: &[f64]) -> Matrix {
    let m = neighbor_messages(adjacency, h);
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for v in 0..h.rows() {
        let d = damp[v];
        for ((o, &mv), &hv) in out.row_mut(v).iter_mut().zip(m.row(v)).zip(h.row(v)) {
            *o = sigmoid(d * mv + (1.0 - d) * hv);
        }
    }
    out
}

/// One GLAIN layer, damping computed from the current states.
pub fn glain_layer(adjacency: &[Vec<usize>], h: &Matrix, params: &GlainParams) -> Matrix {
    let damp: Vec<f64> = h.iter_rows().map(|row| damping(row, params)).collect();
    glain_update(adjacency, h, &damp)
}

/// Path-count weighted pooling of final node states.
pub fn readout(ctx: &SubgraphContext, h: &Matrix) -> Vec<f64> {
    let mut pooled = vec![0.0; h.cols()];
    for (v, &w) in ctx.readout_weights.iter().enumerate() {
        if w != 0.0 {
            for (p, &x) in pooled.iter_mut().zip(h.row(v)) {
                *p += w * x;
            }
        }
    }
    pooled
}

/// Intermediate values of one subgraph's forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    /// `states[t]` is the input of layer `t`; the last entry is the output.
    states: Vec<Matrix>,
    damping: Vec<Vec<f64>>,
    messages: Vec<Matrix>,
    pub embedding: Vec<f64>,
}

pub fn forward(ctx: &SubgraphContext, params: &GlainParams) -> Tape {
    let mut states = vec![init_features(ctx, params)];
    let mut damping_all = Vec::with_capacity(params.layers);
    let mut messages = Vec::with_capacity(params.layers);
    for _ in 0..params.layers {
        let h = states.last().unwrap();
        let damp: Vec<f64> = h.iter_rows().map(|row| damping(row, params)).collect();
        let m = neighbor_messages(&ctx.adjacency, h);
        let mut next = Matrix::zeros(h.rows(), h.cols());
        for v in 0..h.rows() {
            let d = damp[v];
            for ((o, &mv), &hv) in next.row_mut(v).iter_mut().zip(m.row(v)).zip(h.row(v)) {
                *o = sigmoid(d * mv + (1.0 - d) * hv);
            }
        }
        damping_all.push(damp);
        messages.push(m);
        states.push(next);
    }
    let embedding = readout(ctx, states.last().unwrap());
    Tape {
        states,
        damping: damping_all,
        messages,
        embedding,
    }
}

/// Reverse pass for one subgraph: adds the parameter gradients of
/// `upstream . embedding` into `grads`.
pub fn backward_one(
    ctx: &SubgraphContext,
    tape: &Tape,
    params: &GlainParams,
    upstream: &[f64],
    grads: &mut GlainGrads,
) {
    let dim = params.dim();
    let rows = ctx.len();
    let mut grad_h = Matrix::zeros(rows, dim);
    for (v, &w) in ctx.readout_weights.iter().enumerate() {
        for (g, &u) in grad_h.row_mut(v).iter_mut().zip(upstream) {
            *g = w * u;
        }
    }
    for t in (0..params.layers).rev() {
        let h = &tape.states[t];
        let out = &tape.states[t + 1];
        let m = &tape.messages[t];
        let damp = &tape.damping[t];
        let mut grad_prev = Matrix::zeros(rows, dim);
        let mut grad_msg = Matrix::zeros(rows, dim);
        for v in 0..rows {
            let d = damp[v];
            let mut grad_d = 0.0;
            for k in 0..dim {
                let y = out.get(v, k);
                let grad_pre = grad_h.get(v, k) * y * (1.0 - y);
                grad_d += grad_pre * (m.get(v, k) - h.get(v, k));
                grad_msg.set(v, k, grad_pre * d);
                grad_prev.set(v, k, grad_prev.get(v, k) + grad_pre * (1.0 - d));
            }
            let grad_z = grad_d * d * (1.0 - d);
            grads.damping_bias += grad_z;
            for k in 0..dim {
                grads.damping_weight[k] += grad_z * h.get(v, k);
                grad_prev.set(
                    v,
                    k,
                    grad_prev.get(v, k) + grad_z * params.damping_weight[k],
                );
            }
        }
        // m_v = sum_{u in N(v)} h_u / |N(u)|
        for (v, nbrs) in ctx.adjacency.iter().enumerate() {
            for &u in nbrs {
                let scale = 1.0 / ctx.adjacency[u].len() as f64;
                for k in 0..dim {
                    grad_prev.set(u, k, grad_prev.get(u, k) + scale * grad_msg.get(v, k));
                }
            }
        }
        grad_h = grad_prev;
    }
    for r in 0..rows {
        let feats = ctx.features.row(r);
        for (f, &x) in feats.iter().enumerate() {
            if x != 0.0 {
                let row = grads.input_proj.row_mut(f);
                for (g, &gh) in row.iter_mut().zip(grad_h.row(r)) {
                    *g += x * gh;
                }
            }
        }
    }
}

/// Embedding matrix, one row per subgraph, plus the tapes for a backward pass.
pub fn forward_all(contexts: &[SubgraphContext], params: &GlainParams) -> (Matrix, Vec<Tape>) {
    let tapes: Vec<Tape> = contexts.par_iter().map(|c| forward(c, params)).collect();
    let rows: Vec<Vec<f64>> = tapes.iter().map(|t| t.embedding.clone()).collect();
    (Matrix::from_rows(&rows), tapes)
}

/// Subgraph-level embeddings of every node.
pub fn embed_all(contexts: &[SubgraphContext], params: &GlainParams) -> Matrix {
    forward_all(contexts, params).0
}

/// Parameter gradients given the loss gradient with respect to every
/// embedding row. Per-subgraph gradients are summed in row order.
pub fn backward(
    contexts: &[SubgraphContext],
    tapes: &[Tape],
    params: &GlainParams,
    upstream: &Matrix,
) -> Result<GlainGrads> {
    if upstream.rows() != contexts.len() || upstream.cols() != params.dim() {
        return Err(Error::Shape(format!(
            "upstream gradient is {}x{}, expected {}x{}",
            upstream.rows(),
            upstream.cols(),
            contexts.len(),
            params.dim()
        )));
    }
    if !upstream.is_finite() {
        return Err(Error::NonFinite("upstream embedding gradient".into()));
    }
    let parts: Vec<GlainGrads> = contexts
        .par_iter()
        .zip(tapes)
        .enumerate()
        .map(|(i, (ctx, tape))| {
            let mut g = params.zeros_like();
            if upstream.row(i).iter().any(|&x| x != 0.0) {
                backward_one(ctx, tape, params, upstream.row(i), &mut g);
            }
            g
        })
        .collect();
    let mut total = params.zeros_like();
    for part in &parts {
        total.accumulate(part);
    }
    Ok(total)
}
