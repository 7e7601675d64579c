//! Ego influence subgraphs: the nodes a short cascade from `v` reaches, plus
//! every network edge among them.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::diffusion::{cascade_ic, DiffusionConfig, SeedLayers};
use crate::error::{Error, Result};
use crate::multiplex::{LayerGraph, MultilayerNetwork, NodeId};
use crate::seeding::{derive, CoinField};

/// Default cascade depth.
pub const DEFAULT_STEP: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Activation probability per layer.
    pub probs: Vec<f64>,
    /// Cross-layer probability per source layer.
    pub theta: Vec<f64>,
    /// Maximum number of cascade rounds.
    pub step: usize,
    /// Independent cascades unioned per root.
    pub repeats: usize,
    /// `true`: the root starts active in every layer. `false`: only in the
    /// first layer, reaching the others through cross-layer attempts.
    pub root_all_layers: bool,
}

impl SamplerConfig {
    pub fn new(probs: Vec<f64>, theta: Vec<f64>, step: usize) -> Self {
        Self {
            probs,
            theta,
            step,
            repeats: 1,
            root_all_layers: true,
        }
    }

    /// Borrow `p`, `theta` and `max_steps` from a diffusion config.
    pub fn from_diffusion(cfg: &DiffusionConfig) -> Self {
        Self::new(cfg.per_layer_p.clone(), cfg.theta.clone(), cfg.max_steps)
    }

    fn validate(&self, net: &MultilayerNetwork) -> Result<()> {
        let layers = net.layer_count();
        if self.probs.len() != layers || self.theta.len() != layers {
            return Err(Error::invalid(format!(
                "sampler needs {layers} probabilities and {layers} theta values"
            )));
        }
        if self
            .probs
            .iter()
            .chain(&self.theta)
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::invalid("sampler probabilities must lie in [0, 1]"));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("subgraph_repeats must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EgoInfSubgraph {
    pub root: NodeId,
    /// Activated nodes, ascending; always contains `root`.
    pub nodes: Vec<NodeId>,
    /// Flattened-network edges with both ends activated, `(u, v)` with `u < v`, ascending.
    pub edges: Vec<(NodeId, NodeId)>,
    /// For each entry of `nodes`, the layers it was activated in.
    pub layer_membership: Vec<Vec<usize>>,
}

impl EgoInfSubgraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Position of a global node id inside `nodes`.
    pub fn local_index(&self, v: NodeId) -> Option<usize> {
        self.nodes.binary_search(&v).ok()
    }

    /// Adjacency in local indices.
    pub fn local_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(u, v) in &self.edges {
            let (a, b) = (self.local_index(u).unwrap(), self.local_index(v).unwrap());
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// One line: `root<TAB>n1,n2,...<TAB>u-v,u-v,...`.
    pub fn to_line(&self) -> String {
        let nodes = self
            .nodes
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let edges = self
            .edges
            .iter()
            .map(|(u, v)| format!("{u}-{v}"))
            .collect::<Vec<_>>()
            .join(",");
        format!("{}\t{}\t{}", self.root, nodes, edges)
    }
}

fn build(root: NodeId, activated: Vec<Vec<bool>>, flat: &LayerGraph) -> EgoInfSubgraph {
    let n = flat.node_count();
    let nodes: Vec<NodeId> = (0..n).filter(|&v| activated.iter().any(|l| l[v])).collect();
    let mut inside = vec![false; n];
    for &v in &nodes {
        inside[v] = true;
    }
    let edges = nodes
        .iter()
        .flat_map(|&u| {
            flat.neighbors(u)
                .iter()
                .filter(move |&&w| w > u)
                .map(move |&w| (u, w))
        })
        .filter(|&(_, w)| inside[w])
        .collect();
    let layer_membership = nodes
        .iter()
        .map(|&v| (0..activated.len()).filter(|&l| activated[l][v]).collect())
        .collect();
    EgoInfSubgraph {
        root,
        nodes,
        edges,
        layer_membership,
    }
}

fn extract_with_flat(
    net: &MultilayerNetwork,
    flat: &LayerGraph,
    v: NodeId,
    cfg: &SamplerConfig,
    master_seed: u64,
) -> EgoInfSubgraph {
    let seed_layers = if cfg.root_all_layers {
        SeedLayers::All
    } else {
        SeedLayers::Home(0)
    };
    let mut activated = vec![vec![false; net.node_count()]; net.layer_count()];
    for repeat in 0..cfg.repeats {
        let coins = CoinField::new(derive(master_seed, &[v as u64, repeat as u64]));
        let out = cascade_ic(
            net,
            &[v],
            &cfg.probs,
            &cfg.theta,
            cfg.step,
            coins,
            seed_layers,
        );
        for (acc, steps) in activated.iter_mut().zip(&out.activation_step) {
            for (a, s) in acc.iter_mut().zip(steps) {
                *a |= s.is_some();
            }
        }
    }
    build(v, activated, flat)
}

/// Run the cascade from `v` and collect its influence subgraph.
pub fn extract_ego_inf_subgraph(
    net: &MultilayerNetwork,
    v: NodeId,
    cfg: &SamplerConfig,
    master_seed: u64,
) -> Result<EgoInfSubgraph> {
    cfg.validate(net)?;
    if v >= net.node_count() {
        return Err(Error::invalid(format!("node {v} out of range")));
    }
    Ok(extract_with_flat(net, &net.flatten(), v, cfg, master_seed))
}

/// One subgraph per node, indexed by root. Node `v` draws from its own
/// substream of `master_seed`, so the result does not depend on scheduling.
pub fn extract_all(
    net: &MultilayerNetwork,
    cfg: &SamplerConfig,
    master_seed: u64,
) -> Result<Vec<EgoInfSubgraph>> {
    cfg.validate(net)?;
    let flat = net.flatten();
    Ok((0..net.node_count())
        .into_par_iter()
        .map(|v| extract_with_flat(net, &flat, v, cfg, master_seed))
        .collect())
}

/// Line-delimited persistence, one subgraph per line.
pub fn subgraphs_to_text(subgraphs: &[EgoInfSubgraph]) -> String {
    let mut out = String::from("# root\tactivated\tedges\n");
    for sub in subgraphs {
        let _ = writeln!(out, "{}", sub.to_line());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> MultilayerNetwork {
        MultilayerNetwork::from_layer_edges(3, &[vec![(0, 1), (1, 2)]]).unwrap()
    }

    #[test]
    fn zero_steps_is_singleton() {
        let cfg = SamplerConfig::new(vec![1.0], vec![1.0], 0);
        let sub = extract_ego_inf_subgraph(&path3(), 1, &cfg, 0).unwrap();
        assert_eq!(sub.nodes, vec![1]);
        assert!(sub.edges.is_empty());
    }

    #[test]
    fn certain_cascade_reaches_everything() {
        let net =
            MultilayerNetwork::from_layer_edges(5, &[vec![(0, 1), (1, 2)], vec![(2, 3), (3, 4)]])
                .unwrap();
        let cfg = SamplerConfig::new(vec![1.0, 1.0], vec![1.0, 1.0], usize::MAX);
        let sub = extract_ego_inf_subgraph(&net, 0, &cfg, 0).unwrap();
        assert_eq!(sub.nodes, vec![0, 1, 2, 3, 4]);
        assert_eq!(sub.edges.len(), 4);
    }

    #[test]
    fn one_round_cap() {
        let cfg = SamplerConfig::new(vec![1.0], vec![1.0], 1);
        let sub = extract_ego_inf_subgraph(&path3(), 0, &cfg, 0).unwrap();
        assert_eq!(sub.nodes, vec![0, 1]);
        assert_eq!(sub.edges, vec![(0, 1)]);
        assert_eq!(sub.to_line(), "0\t0,1\t0-1");
    }

    #[test]
    fn edges_come_from_every_layer() {
        // 0-1 reached in layer 1 only, edge 0-1 also exists in layer 2
        let net =
            MultilayerNetwork::from_layer_edges(3, &[vec![(0, 1), (1, 2)], vec![(0, 2)]]).unwrap();
        let cfg = SamplerConfig::new(vec![1.0, 0.0], vec![0.0, 0.0], 5);
        let sub = extract_ego_inf_subgraph(&net, 0, &cfg, 0).unwrap();
        assert_eq!(sub.nodes, vec![0, 1, 2]);
        assert_eq!(sub.edges, vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(sub.layer_membership, vec![vec![0, 1], vec![0], vec![0]]);
    }

    #[test]
    fn zero_theta_blocks_isolated_layer() {
        // the root is isolated in layer 2, so without cross-layer transfer
        // layer 2 cannot activate anything but the root
        let net =
            MultilayerNetwork::from_layer_edges(4, &[vec![(0, 1), (1, 2)], vec![(1, 3), (2, 3)]])
                .unwrap();
        let cfg = SamplerConfig::new(vec![1.0, 1.0], vec![0.0, 0.0], 10);
        let sub = extract_ego_inf_subgraph(&net, 0, &cfg, 0).unwrap();
        assert_eq!(sub.nodes, vec![0, 1, 2]);
        for (i, &v) in sub.nodes.iter().enumerate() {
            if v != 0 {
                assert!(!sub.layer_membership[i].contains(&1));
            }
        }
    }

    #[test]
    fn home_layer_root() {
        let net = MultilayerNetwork::from_layer_edges(3, &[vec![(0, 1)], vec![(0, 2)]]).unwrap();
        let mut cfg = SamplerConfig::new(vec![1.0, 1.0], vec![0.0, 0.0], 5);
        cfg.root_all_layers = false;
        let sub = extract_ego_inf_subgraph(&net, 0, &cfg, 0).unwrap();
        assert_eq!(sub.nodes, vec![0, 1]);
    }

    #[test]
    fn edgeless_network_singletons() {
        let net = MultilayerNetwork::from_layer_edges(4, &[vec![], vec![]]).unwrap();
        let cfg = SamplerConfig::new(vec![0.5, 0.5], vec![0.5, 0.5], 5);
        let subs = extract_all(&net, &cfg, 1).unwrap();
        assert_eq!(subs.len(), 4);
        for (v, sub) in subs.iter().enumerate() {
            assert_eq!(sub.nodes, vec![v]);
        }
    }

    #[test]
    fn repeats_union_cascades() {
        let net =
            MultilayerNetwork::from_layer_edges(6, &[(1..6).map(|l| (0, l)).collect()]).unwrap();
        let mut cfg = SamplerConfig::new(vec![0.3], vec![0.0], 5);
        let single = extract_ego_inf_subgraph(&net, 0, &cfg, 3).unwrap();
        cfg.repeats = 4;
        let many = extract_ego_inf_subgraph(&net, 0, &cfg, 3).unwrap();
        assert!(single.nodes.iter().all(|v| many.nodes.contains(v)));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SamplerConfig::new(vec![0.5, 0.5], vec![0.5], 1);
        assert!(extract_all(&path3(), &cfg, 0).is_err());
        let cfg = SamplerConfig::new(vec![0.5], vec![0.5], 1);
        assert!(extract_ego_inf_subgraph(&path3(), 9, &cfg, 0).is_err());
    }
}
