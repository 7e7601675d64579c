//! Monte-Carlo diffusion on multiplex networks: Multi-IC, Multi-SIR and Multi-LT.
//!
//! All three share the same layer coupling. A node is tracked separately in
//! every layer; the first time its copy in layer `i` becomes active, each
//! still-inactive copy in another layer `j` is activated with probability
//! `theta[i]` in the same step. The attempt is made once.
//!
//! Randomness comes from a [`CoinField`] keyed by event, so a run is a pure
//! function of `(network, seeds, config, run key)` and is independent of the
//! order in which active nodes are visited.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::multiplex::{MultilayerNetwork, NodeId};
use crate::seeding::{derive, CoinField};

/// `max_steps` value meaning "run until quiescence".
pub const UNBOUNDED_STEPS: usize = usize::MAX;

const COIN_EDGE: u64 = 1;
const COIN_CROSS: u64 = 2;
const COIN_RECOVER: u64 = 3;
const COIN_THRESHOLD: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiffusionModel {
    Sir,
    Ic,
    Lt,
}

impl DiffusionModel {
    pub const ALL: [DiffusionModel; 3] =
        [DiffusionModel::Sir, DiffusionModel::Ic, DiffusionModel::Lt];

    pub fn name(self) -> &'static str {
        match self {
            DiffusionModel::Sir => "Multi-SIR",
            DiffusionModel::Ic => "Multi-IC",
            DiffusionModel::Lt => "Multi-LT",
        }
    }

    pub(crate) fn stream_tag(self) -> u64 {
        match self {
            DiffusionModel::Sir => 1,
            DiffusionModel::Ic => 2,
            DiffusionModel::Lt => 3,
        }
    }
}

impl fmt::Display for DiffusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiffusionModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sir" | "multi-sir" => Ok(DiffusionModel::Sir),
            "ic" | "multi-ic" => Ok(DiffusionModel::Ic),
            "lt" | "multi-lt" => Ok(DiffusionModel::Lt),
            other => Err(Error::invalid(format!("unknown diffusion model {other:?}"))),
        }
    }
}

/// Per-layer probabilities, either explicit or the layer infection threshold.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbabilitySpec {
    Auto,
    Explicit(Vec<f64>),
}

impl ProbabilitySpec {
    /// Resolve to one probability per layer. `Auto` uses `1 / avg_degree`
    /// and fails on layers without edges. A single explicit value is
    /// broadcast to every layer.
    pub fn resolve(&self, net: &MultilayerNetwork) -> Result<Vec<f64>> {
        let layers = net.layer_count();
        match self {
            ProbabilitySpec::Auto => net
                .all_layer_stats()
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    s.infection_threshold
                        .map(|b| b.min(1.0))
                        .ok_or(Error::UndefinedThreshold { layer: i + 1 })
                })
                .collect(),
            ProbabilitySpec::Explicit(values) => {
                let resolved = broadcast(values, layers, "probability")?;
                check_probabilities(&resolved, "probability")?;
                Ok(resolved)
            }
        }
    }
}

pub(crate) fn broadcast(values: &[f64], layers: usize, what: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; layers]),
        len if len == layers => Ok(values.to_vec()),
        len => Err(Error::invalid(format!(
            "{what} list has {len} entries for {layers} layers"
        ))),
    }
}

fn check_probabilities(values: &[f64], what: &str) -> Result<()> {
    match values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(p) => Err(Error::invalid(format!("{what} {p} outside [0, 1]"))),
        None => Ok(()),
    }
}

/// Parameters shared by all diffusion models.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig {
    /// IC and subgraph-sampling activation probability per layer.
    pub per_layer_p: Vec<f64>,
    /// SIR infection probability per layer.
    pub per_layer_beta: Vec<f64>,
    /// SIR recovery probability.
    pub gamma: f64,
    /// Cross-layer activation probability, indexed by source layer.
    pub theta: Vec<f64>,
    pub max_steps: usize,
    pub runs: usize,
}

impl DiffusionConfig {
    /// Same `p` and `beta` on every layer, unbounded steps.
    pub fn uniform(layers: usize, p: f64, beta: f64, gamma: f64, theta: f64, runs: usize) -> Self {
        Self {
            per_layer_p: vec![p; layers],
            per_layer_beta: vec![beta; layers],
            gamma,
            theta: vec![theta; layers],
            max_steps: UNBOUNDED_STEPS,
            runs,
        }
    }

    /// `p = beta = 1 / avg_degree` per layer, `gamma = 1`.
    pub fn at_thresholds(net: &MultilayerNetwork, theta: &[f64], runs: usize) -> Result<Self> {
        let thresholds = ProbabilitySpec::Auto.resolve(net)?;
        let theta = broadcast(theta, net.layer_count(), "theta")?;
        let cfg = Self {
            per_layer_p: thresholds.clone(),
            per_layer_beta: thresholds,
            gamma: 1.0,
            theta,
            max_steps: UNBOUNDED_STEPS,
            runs,
        };
        cfg.validate(net.layer_count())?;
        Ok(cfg)
    }

    pub fn validate(&self, layers: usize) -> Result<()> {
        for (what, list) in [
            ("p", &self.per_layer_p),
            ("beta", &self.per_layer_beta),
            ("theta", &self.theta),
        ] {
            if list.len() != layers {
                return Err(Error::invalid(format!(
                    "{what} has {} entries for {layers} layers",
                    list.len()
                )));
            }
            check_probabilities(list, what)?;
        }
        check_probabilities(&[self.gamma], "gamma")?;
        if self.runs == 0 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        Ok(())
    }
}

/// Result of one simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffusionOutcome {
    /// `activation_step[layer][node]`: step at which the copy first became
    /// active (or infected), `None` if never.
    pub activation_step: Vec<Vec<Option<u32>>>,
    /// Distinct nodes active in at least one layer.
    pub total_influence: usize,
}

impl DiffusionOutcome {
    pub fn is_active(&self, layer: usize, v: NodeId) -> bool {
        self.activation_step[layer][v].is_some()
    }

    pub fn ever_active(&self, v: NodeId) -> bool {
        self.activation_step.iter().any(|l| l[v].is_some())
    }

    /// Nodes active in any layer, ascending.
    pub fn activated_nodes(&self) -> Vec<NodeId> {
        let n = self.activation_step.first().map_or(0, Vec::len);
        (0..n).filter(|&v| self.ever_active(v)).collect()
    }

    /// Bitset view of `activation_step`.
    pub fn activated(&self) -> Vec<Vec<bool>> {
        self.activation_step
            .iter()
            .map(|l| l.iter().map(Option::is_some).collect())
            .collect()
    }

    fn from_steps(activation_step: Vec<Vec<Option<u32>>>) -> Self {
        let n = activation_step.first().map_or(0, Vec::len);
        let total_influence = (0..n)
            .filter(|&v| activation_step.iter().any(|l| l[v].is_some()))
            .count();
        Self {
            activation_step,
            total_influence,
        }
    }
}

/// `1 - prod(1 - p)`: chance that at least one of several independent
/// attempts succeeds.
pub fn neighbor_activation_probability(active_ps: &[f64]) -> f64 {
    1.0 - active_ps.iter().map(|p| 1.0 - p).product::<f64>()
}

/// Which layers a seed starts active in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedLayers {
    All,
    /// Seed active only in this layer at step 0; its other copies get the
    /// usual cross-layer attempt.
    Home(usize),
}

fn check_seeds(net: &MultilayerNetwork, seeds: &[NodeId]) -> Result<()> {
    match seeds.iter().find(|&&s| s >= net.node_count()) {
        Some(s) => Err(Error::invalid(format!(
            "seed {s} out of range for {} nodes",
            net.node_count()
        ))),
        None => Ok(()),
    }
}

/// Per-layer activation table plus the cross-layer trigger.
struct Activations<'a> {
    steps: Vec<Vec<Option<u32>>>,
    theta: &'a [f64],
    coins: CoinField,
}

impl<'a> Activations<'a> {
    fn new(net: &MultilayerNetwork, theta: &'a [f64], coins: CoinField) -> Self {
        Self {
            steps: vec![vec![None; net.node_count()]; net.layer_count()],
            theta,
            coins,
        }
    }

    fn is_active(&self, layer: usize, v: NodeId) -> bool {
        self.steps[layer][v].is_some()
    }

    /// Mark `(layer, v)` active at `step` and run its cross-layer attempts.
    /// Every newly active copy is appended to `fresh`.
    fn activate(&mut self, layer: usize, v: NodeId, step: u32, fresh: &mut Vec<(usize, NodeId)>) {
        debug_assert!(self.steps[layer][v].is_none());
        self.steps[layer][v] = Some(step);
        fresh.push((layer, v));
        self.cross_from(layer, v, step, fresh);
    }

    fn cross_from(&mut self, layer: usize, v: NodeId, step: u32, fresh: &mut Vec<(usize, NodeId)>) {
        let layers = self.steps.len();
        let mut pending = vec![layer];
        while let Some(src) = pending.pop() {
            let theta = self.theta[src];
            if theta <= 0.0 {
                continue;
            }
            for dst in 0..layers {
                if dst == src || self.steps[dst][v].is_some() {
                    continue;
                }
                if self
                    .coins
                    .uniform(COIN_CROSS, v as u64, src as u64, dst as u64)
                    < theta
                {
                    self.steps[dst][v] = Some(step);
                    fresh.push((dst, v));
                    pending.push(dst);
                }
            }
        }
    }

    fn seed(&mut self, seeds: &[NodeId], seed_layers: SeedLayers) -> Vec<(usize, NodeId)> {
        let mut fresh = Vec::new();
        for &s in seeds {
            match seed_layers {
                SeedLayers::All => {
                    for layer in 0..self.steps.len() {
                        if self.steps[layer][s].is_none() {
                            self.steps[layer][s] = Some(0);
                            fresh.push((layer, s));
                        }
                    }
                }
                SeedLayers::Home(layer) => {
                    if self.steps[layer][s].is_none() {
                        self.activate(layer, s, 0, &mut fresh);
                    }
                }
            }
        }
        fresh
    }
}

/// Multi-IC cascade with per-layer probabilities `probs`.
pub(crate) fn cascade_ic(
    net: &MultilayerNetwork,
    seeds: &[NodeId],
    probs: &[f64],
    theta: &[f64],
    max_steps: usize,
    coins: CoinField,
    seed_layers: SeedLayers,
) -> DiffusionOutcome {
    let mut acts = Activations::new(net, theta, coins);
    let mut frontier = acts.seed(seeds, seed_layers);
    let mut step = 0usize;
    while !frontier.is_empty() && step < max_steps {
        step += 1;
        let mut fresh = Vec::new();
        for &(layer, u) in &frontier {
            let p = probs[layer];
            if p <= 0.0 {
                continue;
            }
            for &w in net.layer(layer).neighbors(u) {
                if !acts.is_active(layer, w)
                    && acts
                        .coins
                        .uniform(COIN_EDGE, layer as u64, u as u64, w as u64)
                        < p
                {
                    acts.activate(layer, w, step as u32, &mut fresh);
                }
            }
        }
        frontier = fresh;
    }
    DiffusionOutcome::from_steps(acts.steps)
}

/// Single Multi-IC run. Each newly active copy gets exactly one attempt per
/// inactive same-layer neighbour, one step after its own activation.
pub fn run_multi_ic(
    net: &MultilayerNetwork,
    seeds: &[NodeId],
    cfg: &DiffusionConfig,
    run_seed: u64,
) -> Result<DiffusionOutcome> {
    cfg.validate(net.layer_count())?;
    check_seeds(net, seeds)?;
    Ok(cascade_ic(
        net,
        seeds,
        &cfg.per_layer_p,
        &cfg.theta,
        cfg.max_steps,
        CoinField::new(run_seed),
        SeedLayers::All,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SirState {
    Susceptible,
    /// Infected, with the number of infectious rounds already spent.
    Infected(u32),
    Recovered,
}

fn simulate_sir(
    net: &MultilayerNetwork,
    seeds: &[NodeId],
    cfg: &DiffusionConfig,
    coins: CoinField,
) -> DiffusionOutcome {
    let n = net.node_count();
    let mut acts = Activations::new(net, &cfg.theta, coins);
    let mut state = vec![vec![SirState::Susceptible; n]; net.layer_count()];
    let mut infectious = acts.seed(seeds, SeedLayers::All);
    for &(layer, v) in &infectious {
        state[layer][v] = SirState::Infected(0);
    }
    let mut step = 0usize;
    while !infectious.is_empty() && step < cfg.max_steps {
        if cfg.gamma < 1.0 && !can_spread(net, &state, &infectious, &cfg.per_layer_beta) {
            break;
        }
        step += 1;
        let mut fresh = Vec::new();
        for &(layer, u) in &infectious {
            let beta = cfg.per_layer_beta[layer];
            if beta <= 0.0 {
                continue;
            }
            let SirState::Infected(rounds) = state[layer][u] else {
                unreachable!("infectious list holds only infected copies")
            };
            // attempt index folded into the layer key keeps gamma = 1 runs
            // on the same coins as IC
            let key = layer as u64 | (u64::from(rounds) << 32);
            for &w in net.layer(layer).neighbors(u) {
                if !acts.is_active(layer, w)
                    && acts.coins.uniform(COIN_EDGE, key, u as u64, w as u64) < beta
                {
                    acts.activate(layer, w, step as u32, &mut fresh);
                }
            }
        }
        let mut still = Vec::with_capacity(infectious.len());
        for &(layer, u) in &infectious {
            let SirState::Infected(rounds) = state[layer][u] else {
                unreachable!()
            };
            let recover =
                acts.coins
                    .uniform(COIN_RECOVER, layer as u64, u as u64, u64::from(rounds))
                    < cfg.gamma;
            if recover {
                state[layer][u] = SirState::Recovered;
            } else {
                state[layer][u] = SirState::Infected(rounds + 1);
                still.push((layer, u));
            }
        }
        for &(layer, v) in &fresh {
            state[layer][v] = SirState::Infected(0);
        }
        still.extend(fresh);
        infectious = still;
    }
    DiffusionOutcome::from_steps(acts.steps)
}

/// Whether any infectious copy still has a susceptible neighbour it could reach.
fn can_spread(
    net: &MultilayerNetwork,
    state: &[Vec<SirState>],
    infectious: &[(usize, NodeId)],
    beta: &[f64],
) -> bool {
    infectious.iter().any(|&(layer, u)| {
        beta[layer] > 0.0
            && net
                .layer(layer)
                .neighbors(u)
                .iter()
                .any(|&w| state[layer][w] == SirState::Susceptible)
    })
}

/// Single Multi-SIR run. Every infected copy tries each susceptible
/// same-layer neighbour once per infectious round, then recovers with
/// probability `gamma` at the end of that round. Influence counts infected
/// plus recovered nodes.
pub fn run_multi_sir(
    net: &MultilayerNetwork,
    seeds: &[NodeId],
    cfg: &DiffusionConfig,
    run_seed: u64,
) -> Result<DiffusionOutcome> {
    cfg.validate(net.layer_count())?;
    check_seeds(net, seeds)?;
    Ok(simulate_sir(net, seeds, cfg, CoinField::new(run_seed)))
}

fn simulate_lt(
    net: &MultilayerNetwork,
    seeds: &[NodeId],
    cfg: &DiffusionConfig,
    coins: CoinField,
) -> DiffusionOutcome {
    let n = net.node_count();
    let mut acts = Activations::new(net, &cfg.theta, coins);
    let mut weight = vec![vec![0.0f64; n]; net.layer_count()];
    let mut frontier = acts.seed(seeds, SeedLayers::All);
    let mut step = 0usize;
    while !frontier.is_empty() && step < cfg.max_steps {
        step += 1;
        let mut candidates = Vec::new();
        for &(layer, u) in &frontier {
            let graph = net.layer(layer);
            for &w in graph.neighbors(u) {
                if !acts.is_active(layer, w) {
                    weight[layer][w] += 1.0 / graph.degree(w) as f64;
                    candidates.push((layer, w));
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        let mut fresh = Vec::new();
        for (layer, w) in candidates {
            if acts.is_active(layer, w) {
                continue;
            }
            // threshold in (0, 1]
            let threshold = 1.0
                - acts
                    .coins
                    .uniform(COIN_THRESHOLD, layer as u64, w as u64, 0);
            if weight[layer][w] + 1e-12 >= threshold {
                acts.activate(layer, w, step as u32, &mut fresh);
            }
        }
        frontier = fresh;
    }
    DiffusionOutcome::from_steps(acts.steps)
}

/// Single Multi-LT run with uniform `1/deg` in-weights and uniform thresholds.
pub fn run_multi_lt(
    net: &MultilayerNetwork,
    seeds: &[NodeId],
    cfg: &DiffusionConfig,
    run_seed: u64,
) -> Result<DiffusionOutcome> {
    cfg.validate(net.layer_count())?;
    check_seeds(net, seeds)?;
    Ok(simulate_lt(net, seeds, cfg, CoinField::new(run_seed)))
}

pub(crate) fn simulate(
    model: DiffusionModel,
    net: &MultilayerNetwork,
    seeds: &[NodeId],
    cfg: &DiffusionConfig,
    coins: CoinField,
) -> DiffusionOutcome {
    match model {
        DiffusionModel::Ic => cascade_ic(
            net,
            seeds,
            &cfg.per_layer_p,
            &cfg.theta,
            cfg.max_steps,
            coins,
            SeedLayers::All,
        ),
        DiffusionModel::Sir => simulate_sir(net, seeds, cfg, coins),
        DiffusionModel::Lt => simulate_lt(net, seeds, cfg, coins),
    }
}

/// Seed of run `run` under `master`.
pub fn run_seed(master: u64, run: usize) -> u64 {
    derive(master, &[run as u64])
}

/// Sample mean of the spread with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub runs: usize,
}

fn summarize(counts: &[usize]) -> InfluenceEstimate {
    let runs = counts.len();
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    let mean = total as f64 / runs as f64;
    let var = if runs > 1 {
        counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (runs - 1) as f64
    } else {
        0.0
    };
    InfluenceEstimate {
        mean,
        std_error: (var / runs as f64).sqrt(),
        runs,
    }
}

/// Mean spread over `cfg.runs` runs; run `r` uses `run_seed(master_seed, r)`.
/// Runs execute in parallel; the result does not depend on scheduling.
pub fn estimate_influence_stats(
    net: &MultilayerNetwork,
    seeds: &[NodeId],
    model: DiffusionModel,
    cfg: &DiffusionConfig,
    master_seed: u64,
) -> Result<InfluenceEstimate> {
    cfg.validate(net.layer_count())?;
    check_seeds(net, seeds)?;
    let counts: Vec<usize> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| {
            simulate(
                model,
                net,
                seeds,
                cfg,
                CoinField::new(run_seed(master_seed, r)),
            )
            .total_influence
        })
        .collect();
    Ok(summarize(&counts))
}

pub fn estimate_influence(
    net: &MultilayerNetwork,
    seeds: &[NodeId],
    model: DiffusionModel,
    cfg: &DiffusionConfig,
    master_seed: u64,
) -> Result<f64> {
    estimate_influence_stats(net, seeds, model, cfg, master_seed).map(|e| e.mean)
}

/// Sequential variant for callers that already parallelize at a coarser grain.
pub(crate) fn estimate_sequential(
    net: &MultilayerNetwork,
    seeds: &[NodeId],
    model: DiffusionModel,
    cfg: &DiffusionConfig,
    master_seed: u64,
) -> InfluenceEstimate {
    let counts: Vec<usize> = (0..cfg.runs)
        .map(|r| {
            simulate(
                model,
                net,
                seeds,
                cfg,
                CoinField::new(run_seed(master_seed, r)),
            )
            .total_influence
        })
        .collect();
    summarize(&counts)
}

/// Per-node single-seed Multi-SIR spread used as regression targets.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceLabels {
    pub scores: Vec<f64>,
}

/// Label every node with its mean single-seed SIR spread. Node `v` uses
/// master seed `derive(master_seed, [v])`.
pub fn generate_labels(
    net: &MultilayerNetwork,
    cfg: &DiffusionConfig,
    master_seed: u64,
) -> Result<InfluenceLabels> {
    cfg.validate(net.layer_count())?;
    let scores = (0..net.node_count())
        .into_par_iter()
        .map(|v| {
            estimate_sequential(
                net,
                &[v],
                DiffusionModel::Sir,
                cfg,
                derive(master_seed, &[v as u64]),
            )
            .mean
        })
        .collect();
    Ok(InfluenceLabels { scores })
}

impl InfluenceLabels {
    /// CSV with a provenance comment line followed by `node_id,score`.
    pub fn to_csv(&self, cfg: &DiffusionConfig, master_seed: u64) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        let mut out = format!(
            "# model=Multi-SIR beta={} theta={} gamma={} runs={} master_seed={}\nnode_id,score\n",
            join(&cfg.per_layer_beta),
            join(&cfg.theta),
            cfg.gamma,
            cfg.runs,
            master_seed
        );
        for (v, s) in self.scores.iter().enumerate() {
            let _ = writeln!(out, "{v},{s}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut scores = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("node_id") {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let (id, score) = line
                .split_once(',')
                .ok_or_else(|| parse_err(format!("expected `node_id,score`, got {line:?}")))?;
            let id: usize = id
                .parse()
                .map_err(|_| parse_err(format!("bad node id {id:?}")))?;
            let score: f64 = score
                .parse()
                .map_err(|_| parse_err(format!("bad score {score:?}")))?;
            if id != scores.len() {
                return Err(parse_err(format!(
                    "expected node {} next, got {id}",
                    scores.len()
                )));
            }
            scores.push(score);
        }
        Ok(Self { scores })
    }
}
