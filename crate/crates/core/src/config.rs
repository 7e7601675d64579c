//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::differentiation::DEFAULT_TAU;
use crate::diffusion::{DiffusionModel, ProbabilitySpec};
use crate::error::{Error, Result};
use crate::evaluation::{Centrality, DEFAULT_EVAL_RUNS, DEFAULT_GREEDY_RUNS};
use crate::glain::{DEFAULT_DIM, DEFAULT_LAYERS};
use crate::regressor::DEFAULT_HIDDEN;
use crate::sampler::DEFAULT_STEP;
use crate::synth::BlockModelSpec;
use crate::training::{TrainMode, DEFAULT_EPOCHS, DEFAULT_LR, DEFAULT_RECLUSTER};

/// Seed-set size, absolute or as a percentage of the node count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedCount {
    Absolute(usize),
    Percent(f64),
}

impl SeedCount {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let k = match self {
            SeedCount::Absolute(k) => k,
            SeedCount::Percent(p) => ((n as f64 * p / 100.0).round() as usize).max(1),
        };
        if k == 0 || k > n {
            return Err(Error::invalid(format!("seed count {k} outside 1..={n}")));
        }
        Ok(k)
    }
}

impl fmt::Display for SeedCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedCount::Absolute(k) => write!(f, "{k}"),
            SeedCount::Percent(p) => write!(f, "{p}%"),
        }
    }
}

impl FromStr for SeedCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(p) = s.strip_suffix('%') {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad seed percentage {s:?}")))?;
            if !(p > 0.0 && p <= 100.0) {
                return Err(Error::invalid(format!(
                    "seed percentage must be in (0, 100], got {p}"
                )));
            }
            Ok(SeedCount::Percent(p))
        } else {
            let k: usize = s
                .parse()
                .map_err(|_| Error::invalid(format!("bad seed count {s:?}")))?;
            if k == 0 {
                return Err(Error::invalid("seed count must be at least 1"));
            }
            Ok(SeedCount::Absolute(k))
        }
    }
}

/// A comparison method other than the learned model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Centrality(Centrality),
    Random,
    Greedy,
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Baseline::Centrality(c) => write!(f, "{}", c.name().to_ascii_lowercase()),
            Baseline::Random => f.write_str("random"),
            Baseline::Greedy => f.write_str("greedy"),
        }
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(Baseline::Random),
            "greedy" => Ok(Baseline::Greedy),
            other => other.parse().map(Baseline::Centrality),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub synthetic: Option<BlockModelSpec>,
    /// Seed of the synthetic network, independent of `master_seed`.
    pub synth_seed: u64,
    pub step: usize,
    pub subgraph_repeats: usize,
    pub p: ProbabilitySpec,
    pub beta: ProbabilitySpec,
    pub theta: Vec<f64>,
    pub gamma: f64,
    pub embed_dim: usize,
    pub glain_layers: usize,
    pub kmeans_k: Option<usize>,
    pub tau: f64,
    pub epochs: usize,
    pub lr: f64,
    pub hidden: usize,
    pub train_mode: TrainMode,
    pub recluster_every: usize,
    /// Share of nodes held out of the training loss, 0 for none.
    pub monitor_fraction: f64,
    pub label_runs: usize,
    pub eval_runs: usize,
    pub greedy_runs: usize,
    pub k: SeedCount,
    pub models: Vec<DiffusionModel>,
    pub baselines: Vec<Baseline>,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            synthetic: None,
            synth_seed: 0,
            step: DEFAULT_STEP,
            subgraph_repeats: 1,
            p: ProbabilitySpec::Auto,
            beta: ProbabilitySpec::Auto,
            theta: vec![0.5],
            gamma: 1.0,
            embed_dim: DEFAULT_DIM,
            glain_layers: DEFAULT_LAYERS,
            kmeans_k: None,
            tau: DEFAULT_TAU,
            epochs: DEFAULT_EPOCHS,
            lr: DEFAULT_LR,
            hidden: DEFAULT_HIDDEN,
            train_mode: TrainMode::Joint,
            recluster_every: DEFAULT_RECLUSTER,
            monitor_fraction: 0.0,
            label_runs: 1000,
            eval_runs: DEFAULT_EVAL_RUNS,
            greedy_runs: DEFAULT_GREEDY_RUNS,
            k: SeedCount::Percent(10.0),
            models: DiffusionModel::ALL.to_vec(),
            baselines: vec![
                Baseline::Centrality(Centrality::Degree),
                Baseline::Centrality(Centrality::Closeness),
                Baseline::Centrality(Centrality::Betweenness),
                Baseline::Centrality(Centrality::KShell),
                Baseline::Random,
            ],
            master_seed: 0,
            out: None,
        }
    }
}

fn parse_list<T: FromStr>(value: &str, key: &str) -> Result<Vec<T>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split([',', ';'])
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad entry {v:?} for `{key}`")))
        })
        .collect()
}

fn parse_one<T: FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad value {value:?} for `{key}`")))
}

fn parse_prob(value: &str, key: &str) -> Result<ProbabilitySpec> {
    if value.trim().eq_ignore_ascii_case("auto") {
        Ok(ProbabilitySpec::Auto)
    } else {
        parse_list(value, key).map(ProbabilitySpec::Explicit)
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn prob_text(spec: &ProbabilitySpec) -> String {
    match spec {
        ProbabilitySpec::Auto => "auto".into(),
        ProbabilitySpec::Explicit(v) => join(v),
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 32] = [
        "baselines",
        "beta",
        "dataset",
        "embed_dim",
        "epochs",
        "eval_runs",
        "gamma",
        "glain_layers",
        "greedy_runs",
        "hidden",
        "k",
        "kmeans_k",
        "label_runs",
        "lr",
        "master_seed",
        "models",
        "monitor_fraction",
        "out",
        "p",
        "recluster_every",
        "step",
        "subgraph_repeats",
        "synth_blocks",
        "synth_connected",
        "synth_layers",
        "synth_nodes",
        "synth_p_inter",
        "synth_p_intra",
        "synth_seed",
        "tau",
        "theta",
        "train_mode",
    ];

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut synth: BTreeMap<String, String> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let at_line = |e: Error| match e {
                Error::InvalidArgument(message) => Error::Parse {
                    line: idx + 1,
                    message,
                },
                other => other,
            };
            cfg.set(key, value, &mut synth).map_err(at_line)?;
        }
        if !synth.is_empty() {
            cfg.synthetic = Some(synth_spec(&synth)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, synth: &mut BTreeMap<String, String>) -> Result<()> {
        match key {
            "dataset" => self.dataset = (!value.is_empty()).then(|| PathBuf::from(value)),
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "step" => self.step = parse_one(value, key)?,
            "subgraph_repeats" => self.subgraph_repeats = parse_one(value, key)?,
            "p" => self.p = parse_prob(value, key)?,
            "beta" => self.beta = parse_prob(value, key)?,
            "theta" => self.theta = parse_list(value, key)?,
            "gamma" => self.gamma = parse_one(value, key)?,
            "embed_dim" => self.embed_dim = parse_one(value, key)?,
            "glain_layers" => self.glain_layers = parse_one(value, key)?,
            "kmeans_k" => {
                self.kmeans_k = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse_one(value, key)?)
                }
            }
            "tau" => self.tau = parse_one(value, key)?,
            "epochs" => self.epochs = parse_one(value, key)?,
            "lr" => self.lr = parse_one(value, key)?,
            "hidden" => self.hidden = parse_one(value, key)?,
            "train_mode" => {
                self.train_mode = match value {
                    "joint" => TrainMode::Joint,
                    "frozen" => TrainMode::Frozen,
                    _ => {
                        return Err(Error::invalid(format!(
                            "train_mode must be joint or frozen, got {value:?}"
                        )))
                    }
                }
            }
            "recluster_every" => self.recluster_every = parse_one(value, key)?,
            "monitor_fraction" => self.monitor_fraction = parse_one(value, key)?,
            "label_runs" => self.label_runs = parse_one(value, key)?,
            "eval_runs" => self.eval_runs = parse_one(value, key)?,
            "greedy_runs" => self.greedy_runs = parse_one(value, key)?,
            "k" => self.k = value.parse()?,
            "models" => self.models = parse_list(value, key)?,
            "baselines" => self.baselines = parse_list(value, key)?,
            "master_seed" => self.master_seed = parse_one(value, key)?,
            "synth_seed" => self.synth_seed = parse_one(value, key)?,
            k if k.starts_with("synth_") && Self::KEYS.contains(&k) => {
                synth.insert(k.to_string(), value.to_string());
            }
            other => return Err(Error::invalid(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("embed_dim", self.embed_dim),
            ("glain_layers", self.glain_layers),
            ("epochs", self.epochs),
            ("hidden", self.hidden),
            ("recluster_every", self.recluster_every),
            ("label_runs", self.label_runs),
            ("eval_runs", self.eval_runs),
            ("greedy_runs", self.greedy_runs),
            ("subgraph_repeats", self.subgraph_repeats),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::invalid(format!("`{key}` must be at least 1")));
            }
        }
        if self.theta.is_empty() || self.theta.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::invalid("`theta` needs probabilities in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("`gamma` must be in [0, 1]"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("`lr` must be positive"));
        }
        if !(self.tau >= 1.0 && self.tau.is_finite()) {
            return Err(Error::invalid("`tau` must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.monitor_fraction) {
            return Err(Error::invalid("`monitor_fraction` must be in [0, 1)"));
        }
        if self.kmeans_k == Some(0) {
            return Err(Error::invalid("`kmeans_k` must be at least 1"));
        }
        if self.models.is_empty() {
            return Err(Error::invalid(
                "`models` must list at least one diffusion model",
            ));
        }
        Ok(())
    }

    /// Every key in sorted order, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut map: BTreeMap<&str, String> = BTreeMap::new();
        map.insert("baselines", join(&self.baselines));
        map.insert("beta", prob_text(&self.beta));
        map.insert(
            "dataset",
            self.dataset
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        map.insert("embed_dim", self.embed_dim.to_string());
        map.insert("epochs", self.epochs.to_string());
        map.insert("eval_runs", self.eval_runs.to_string());
        map.insert("gamma", self.gamma.to_string());
        map.insert("glain_layers", self.glain_layers.to_string());
        map.insert("greedy_runs", self.greedy_runs.to_string());
        map.insert("hidden", self.hidden.to_string());
        map.insert("k", self.k.to_string());
        map.insert(
            "kmeans_k",
            self.kmeans_k
                .map_or_else(|| "auto".to_string(), |k| k.to_string()),
        );
        map.insert("label_runs", self.label_runs.to_string());
        map.insert("lr", self.lr.to_string());
        map.insert("master_seed", self.master_seed.to_string());
        map.insert(
            "models",
            join(
                &self
                    .models
                    .iter()
                    .map(|m| model_key(*m))
                    .collect::<Vec<_>>(),
            ),
        );
        map.insert("monitor_fraction", self.monitor_fraction.to_string());
        map.insert(
            "out",
            self.out
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        map.insert("p", prob_text(&self.p));
        map.insert("recluster_every", self.recluster_every.to_string());
        map.insert("step", self.step.to_string());
        map.insert("subgraph_repeats", self.subgraph_repeats.to_string());
        map.insert("tau", self.tau.to_string());
        map.insert("theta", join(&self.theta));
        map.insert(
            "train_mode",
            match self.train_mode {
                TrainMode::Joint => "joint",
                TrainMode::Frozen => "frozen",
            }
            .to_string(),
        );
        if let Some(s) = &self.synthetic {
            map.insert("synth_nodes", s.nodes.to_string());
            map.insert("synth_layers", s.layer_count().to_string());
            map.insert("synth_blocks", join(&s.blocks));
            map.insert("synth_p_intra", join(&s.p_intra));
            map.insert("synth_p_inter", s.p_inter.to_string());
            map.insert("synth_connected", s.require_connected.to_string());
        }
        map.insert("synth_seed", self.synth_seed.to_string());
        map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn model_key(model: DiffusionModel) -> &'static str {
    match model {
        DiffusionModel::Sir => "sir",
        DiffusionModel::Ic => "ic",
        DiffusionModel::Lt => "lt",
    }
}

fn synth_spec(keys: &BTreeMap<String, String>) -> Result<BlockModelSpec> {
    let get = |k: &str| {
        keys.get(k)
            .ok_or_else(|| Error::invalid(format!("synthetic network needs `{k}`")))
    };
    let nodes: usize = parse_one(get("synth_nodes")?, "synth_nodes")?;
    let layers: usize = match keys.get("synth_layers") {
        Some(v) => parse_one(v, "synth_layers")?,
        None => 1,
    };
    let blocks: Vec<usize> = match keys.get("synth_blocks") {
        Some(v) => parse_list(v, "synth_blocks")?,
        None => vec![1],
    };
    let blocks = match blocks.as_slice() {
        [b] => vec![*b; layers],
        list if list.len() == layers => list.to_vec(),
        _ => {
            return Err(Error::invalid(
                "`synth_blocks` needs one value or one per layer",
            ))
        }
    };
    let mut spec = BlockModelSpec::new(
        nodes,
        layers,
        1,
        0.0,
        parse_one(get("synth_p_inter")?, "synth_p_inter")?,
    );
    spec.blocks = blocks;
    spec.p_intra = parse_list(get("synth_p_intra")?, "synth_p_intra")?;
    if let Some(v) = keys.get("synth_connected") {
        spec.require_connected = parse_one(v, "synth_connected")?;
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn parses_keys() {
        let text = "# demo\nsynth_nodes = 50\nsynth_layers = 2\nsynth_blocks = 2\nsynth_p_intra = 0.2\nsynth_p_inter = 0.01\nk = 5\ntheta = 0.3,0.7\nmodels = sir, lt\nbaselines = dc,random,greedy\np = 0.1\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.k, SeedCount::Absolute(5));
        assert_eq!(cfg.theta, vec![0.3, 0.7]);
        assert_eq!(cfg.models, vec![DiffusionModel::Sir, DiffusionModel::Lt]);
        assert_eq!(cfg.baselines[2], Baseline::Greedy);
        assert_eq!(cfg.p, ProbabilitySpec::Explicit(vec![0.1]));
        let s = cfg.synthetic.as_ref().unwrap();
        assert_eq!(s.blocks, vec![2, 2]);
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("nonsense").is_err());
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("k = 0").is_err());
        assert!(RunConfig::parse("k = 150%").is_err());
        assert!(RunConfig::parse("epochs = 0").is_err());
    }

    #[test]
    fn seed_count_resolution() {
        assert_eq!(SeedCount::Percent(10.0).resolve(200).unwrap(), 20);
        assert_eq!(SeedCount::Percent(10.0).resolve(39).unwrap(), 4);
        assert_eq!(SeedCount::Absolute(10).resolve(71).unwrap(), 10);
        assert!(SeedCount::Absolute(10).resolve(5).is_err());
    }
}
