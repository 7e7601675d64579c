//! Seed-set quality metrics and baseline selectors.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;

use crate::diffusion::{
    estimate_influence_stats, estimate_sequential, DiffusionConfig, DiffusionModel,
    InfluenceEstimate,
};
use crate::error::{Error, Result};
use crate::multiplex::{MultilayerNetwork, NodeId};
use crate::paths::{betweenness, bfs_distances, core_numbers, harmonic_closeness};
use crate::regressor::select_seeds;
use crate::seeding::{derive, stage, stream_rng};

pub const DEFAULT_EVAL_RUNS: usize = 1000;
pub const DEFAULT_GREEDY_RUNS: usize = 100;
pub const GREEDY_NAME: &str = "greedy (ISF-like)";
pub const RANDOM_NAME: &str = "Random";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    pub method: String,
    pub nodes: Vec<NodeId>,
}

impl SeedSet {
    pub fn new(method: impl Into<String>, nodes: Vec<NodeId>) -> Self {
        Self {
            method: method.into(),
            nodes,
        }
    }
}

/// Mean spread of `seeds` under `model`.
pub fn influence_scale(
    net: &MultilayerNetwork,
    seeds: &[NodeId],
    model: DiffusionModel,
    cfg: &DiffusionConfig,
    master_seed: u64,
) -> Result<InfluenceEstimate> {
    estimate_influence_stats(net, seeds, model, cfg, master_seed)
}

/// Average pairwise seed distance on the flattened graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedDistance {
    pub value: f64,
    /// Pairs with no connecting path, each counted as distance `n`.
    pub unreachable_pairs: usize,
}

pub fn avg_seed_distance(net: &MultilayerNetwork, seeds: &[NodeId]) -> Result<SeedDistance> {
    if seeds.len() < 2 {
        return Err(Error::invalid(
            "average seed distance needs at least two seeds",
        ));
    }
    let n = net.node_count();
    if let Some(&bad) = seeds.iter().find(|&&s| s >= n) {
        return Err(Error::invalid(format!("seed {bad} out of range")));
    }
    let flat = net.flatten();
    let mut total = 0usize;
    let mut unreachable = 0;
    for (i, &s) in seeds.iter().enumerate() {
        let dist = bfs_distances(&flat, s);
        for &t in &seeds[i + 1..] {
            match dist[t] {
                Some(d) => total += d,
                None => {
                    total += n;
                    unreachable += 1;
                }
            }
        }
    }
    let pairs = seeds.len() * (seeds.len() - 1) / 2;
    Ok(SeedDistance {
        value: total as f64 / pairs as f64,
        unreachable_pairs: unreachable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centrality {
    Degree,
    Closeness,
    Betweenness,
    KShell,
}

impl Centrality {
    pub const ALL: [Centrality; 4] = [
        Centrality::Degree,
        Centrality::Closeness,
        Centrality::Betweenness,
        Centrality::KShell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Centrality::Degree => "DC",
            Centrality::Closeness => "CC",
            Centrality::Betweenness => "BC",
            Centrality::KShell => "K-Shell",
        }
    }
}

impl fmt::Display for Centrality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Centrality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dc" | "degree" => Ok(Centrality::Degree),
            "cc" | "closeness" => Ok(Centrality::Closeness),
            "bc" | "betweenness" => Ok(Centrality::Betweenness),
            "k-shell" | "kshell" => Ok(Centrality::KShell),
            other => Err(Error::invalid(format!("unknown centrality {other:?}"))),
        }
    }
}

/// Centrality of every node on the flattened graph. K-Shell scores are the
/// core number plus a degree tie-break scaled below one.
pub fn centrality_scores(net: &MultilayerNetwork, method: Centrality) -> Vec<f64> {
    let flat = net.flatten();
    let n = flat.node_count();
    match method {
        Centrality::Degree => (0..n).map(|v| flat.degree(v) as f64).collect(),
        Centrality::Closeness => harmonic_closeness(&flat),
        Centrality::Betweenness => betweenness(&flat),
        Centrality::KShell => {
            let scale = 1.0 / (n as f64 + 1.0);
            core_numbers(&flat)
                .into_iter()
                .enumerate()
                .map(|(v, c)| c as f64 + flat.degree(v) as f64 * scale)
                .collect()
        }
    }
}

pub fn centrality_baseline(
    net: &MultilayerNetwork,
    method: Centrality,
    k: usize,
) -> Result<SeedSet> {
    let scores = centrality_scores(net, method);
    Ok(SeedSet::new(method.name(), select_seeds(&scores, k)?))
}

/// `k` distinct nodes drawn uniformly.
pub fn random_baseline(net: &MultilayerNetwork, k: usize, master_seed: u64) -> Result<SeedSet> {
    let n = net.node_count();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "cannot draw {k} seeds from {n} nodes"
        )));
    }
    let mut rng = stream_rng(master_seed, &[stage::RANDOM_BASELINE]);
    let mut nodes = index::sample(&mut rng, n, k).into_vec();
    nodes.sort_unstable();
    Ok(SeedSet::new(RANDOM_NAME, nodes))
}

/// Marginal-gain greedy. Every candidate in every round is scored on the
/// same `cfg.runs` random worlds, so gains are compared without sampling noise
/// between candidates.
pub fn greedy_baseline(
    net: &MultilayerNetwork,
    model: DiffusionModel,
    cfg: &DiffusionConfig,
    k: usize,
    master_seed: u64,
) -> Result<SeedSet> {
    let n = net.node_count();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "cannot select {k} seeds from {n} nodes"
        )));
    }
    cfg.validate(net.layer_count())?;
    let world = derive(master_seed, &[stage::GREEDY, model.stream_tag()]);
    let mut chosen: Vec<NodeId> = Vec::with_capacity(k);
    let mut in_set = vec![false; n];
    for _ in 0..k {
        let scores: Vec<(NodeId, f64)> = (0..n)
            .into_par_iter()
            .filter(|&v| !in_set[v])
            .map(|v| {
                let mut trial = chosen.clone();
                trial.push(v);
                (v, estimate_sequential(net, &trial, model, cfg, world).mean)
            })
            .collect();
        let best = scores
            .iter()
            .fold(None::<(NodeId, f64)>, |best, &(v, s)| match best {
                Some((_, bs)) if bs >= s => best,
                _ => Some((v, s)),
            })
            .expect("a candidate remains");
        in_set[best.0] = true;
        chosen.push(best.0);
    }
    Ok(SeedSet::new(GREEDY_NAME, chosen))
}

/// Evaluation seed shared by every method under `model`.
pub fn evaluation_seed(master_seed: u64, model: DiffusionModel) -> u64 {
    derive(master_seed, &[stage::EVALUATION, model.stream_tag()])
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub method: String,
    pub model: DiffusionModel,
    pub k: usize,
    pub influence: InfluenceEstimate,
    pub d_avg: Option<SeedDistance>,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn row(&self, method: &str, model: DiffusionModel) -> Option<&EvalRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.model == model)
    }

    /// `method,model,k,N_k,D_avg,runs,master_seed`; `D_avg` is `NA` for a
    /// single seed and carries a `*` when unreachable pairs were counted as `n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,model,k,N_k,D_avg,runs,master_seed\n");
        for r in &self.rows {
            let d = match r.d_avg {
                Some(d) if d.unreachable_pairs > 0 => format!("{:.6}*", d.value),
                Some(d) => format!("{:.6}", d.value),
                None => "NA".to_string(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{},{},{}",
                csv_field(&r.method),
                r.model.name(),
                r.k,
                r.influence.mean,
                d,
                r.influence.runs,
                r.master_seed
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Scores every seed set under every model. All methods share the evaluation
/// seed of a model.
pub fn run_comparison(
    net: &MultilayerNetwork,
    seed_sets: &[SeedSet],
    models: &[(DiffusionModel, DiffusionConfig)],
    master_seed: u64,
) -> Result<EvalReport> {
    let mut rows = Vec::with_capacity(seed_sets.len() * models.len());
    for set in seed_sets {
        let d_avg = if set.nodes.len() >= 2 {
            Some(avg_seed_distance(net, &set.nodes)?)
        } else {
            None
        };
        for (model, cfg) in models {
            let influence = influence_scale(
                net,
                &set.nodes,
                *model,
                cfg,
                evaluation_seed(master_seed, *model),
            )?;
            rows.push(EvalRow {
                method: set.method.clone(),
                model: *model,
                k: set.nodes.len(),
                influence,
                d_avg,
                master_seed,
            });
        }
    }
    Ok(EvalReport { rows })
}
