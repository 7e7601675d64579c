//! Stochastic block-model multiplex generator for desk-scale experiments.

use rand::Rng;

use crate::error::{Error, Result};
use crate::multiplex::{LayerGraph, MultilayerNetwork};
use crate::seeding::{stage, stream_rng};

/// Parameters of a node-aligned multi-layer block model.
///
/// Layer `i` splits the nodes into `blocks[i]` contiguous, near-equal blocks;
/// pairs inside block `b` connect with `p_intra[b % p_intra.len()]`, pairs
/// across blocks with `p_inter`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockModelSpec {
    pub nodes: usize,
    pub blocks: Vec<usize>,
    pub p_intra: Vec<f64>,
    pub p_inter: f64,
    pub require_connected: bool,
    pub max_attempts: usize,
}

impl BlockModelSpec {
    pub fn new(nodes: usize, layers: usize, blocks: usize, p_intra: f64, p_inter: f64) -> Self {
        Self {
            nodes,
            blocks: vec![blocks; layers],
            p_intra: vec![p_intra],
            p_inter,
            require_connected: true,
            max_attempts: 100,
        }
    }

    pub fn layer_count(&self) -> usize {
        self.blocks.len()
    }

    fn block_of(&self, layer: usize, v: usize) -> usize {
        v * self.blocks[layer] / self.nodes
    }

    fn intra(&self, block: usize) -> f64 {
        self.p_intra[block % self.p_intra.len()]
    }

    /// Expected degree of an average node in one layer.
    pub fn expected_layer_degree(&self, layer: usize) -> f64 {
        let n = self.nodes;
        let mut same = 0usize;
        let mut intra = 0.0;
        for block in 0..self.blocks[layer] {
            let size = (0..n).filter(|&v| self.block_of(layer, v) == block).count();
            let pairs = size * size.saturating_sub(1);
            same += pairs;
            intra += pairs as f64 * self.intra(block);
        }
        let ordered_pairs = n * (n - 1);
        (intra + (ordered_pairs - same) as f64 * self.p_inter) / n as f64
    }

    fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::invalid("block model needs at least 2 nodes"));
        }
        if self.blocks.is_empty() {
            return Err(Error::invalid("block model needs at least one layer"));
        }
        if self.blocks.iter().any(|&b| b == 0 || b > self.nodes) {
            return Err(Error::invalid("block counts must lie in 1..=nodes"));
        }
        if self.p_intra.is_empty() {
            return Err(Error::invalid(
                "block model needs at least one intra-block probability",
            ));
        }
        for &p in self.p_intra.iter().chain([&self.p_inter]) {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
            }
        }
        if self.max_attempts == 0 {
            return Err(Error::invalid("max_attempts must be at least 1"));
        }
        Ok(())
    }
}

/// Sample a block-model multiplex. Deterministic in `seed`; when
/// `require_connected` is set, resamples until the flattened graph is
/// connected or `max_attempts` is exhausted.
pub fn generate_synthetic(spec: &BlockModelSpec, seed: u64) -> Result<MultilayerNetwork> {
    spec.validate()?;
    for layer in 0..spec.layer_count() {
        let expected = spec.expected_layer_degree(layer);
        if expected < 1.0 {
            log::warn!(
                "layer {} expected degree {expected:.3} is below 1",
                layer + 1
            );
        }
    }
    for attempt in 0..spec.max_attempts {
        let layers = (0..spec.layer_count())
            .map(|layer| sample_layer(spec, layer, seed, attempt as u64))
            .collect::<Result<Vec<_>>>()?;
        let net = MultilayerNetwork::new(layers)?;
        if !spec.require_connected || net.flatten().is_connected() {
            return Ok(net);
        }
    }
    Err(Error::Disconnected {
        attempts: spec.max_attempts,
    })
}

fn sample_layer(
    spec: &BlockModelSpec,
    layer: usize,
    seed: u64,
    attempt: u64,
) -> Result<LayerGraph> {
    let mut rng = stream_rng(seed, &[stage::SYNTHETIC, attempt, layer as u64]);
    let n = spec.nodes;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let (bu, bv) = (spec.block_of(layer, u), spec.block_of(layer, v));
            let p = if bu == bv {
                spec.intra(bu)
            } else {
                spec.p_inter
            };
            if p > 0.0 && rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    LayerGraph::from_edges(n, edges).map(|(g, _)| g)
}

/// Multiplex with exactly `edges[i]` edges on layer `i`, drawn uniformly
/// among all simple graphs on `nodes` nodes with that edge count.
pub fn generate_gnm(nodes: usize, edges: &[usize], seed: u64) -> Result<MultilayerNetwork> {
    if nodes < 2 || edges.is_empty() {
        return Err(Error::invalid("need at least 2 nodes and one layer"));
    }
    let pairs = nodes * (nodes - 1) / 2;
    let layers = edges
        .iter()
        .enumerate()
        .map(|(layer, &m)| {
            if m > pairs {
                return Err(Error::invalid(format!(
                    "{m} edges exceed the {pairs} possible pairs"
                )));
            }
            let mut rng = stream_rng(seed, &[stage::SYNTHETIC, u64::MAX, layer as u64]);
            let picked = rand::seq::index::sample(&mut rng, pairs, m);
            let list = picked.into_iter().map(|idx| pair_at(nodes, idx));
            LayerGraph::from_edges(nodes, list).map(|(g, _)| g)
        })
        .collect::<Result<Vec<_>>>()?;
    MultilayerNetwork::new(layers)
}

/// The `idx`-th unordered pair `(u, v)`, `u < v`, in row-major order.
fn pair_at(n: usize, mut idx: usize) -> (usize, usize) {
    let mut u = 0;
    while idx >= n - 1 - u {
        idx -= n - 1 - u;
        u += 1;
    }
    (u, u + 1 + idx)
}
