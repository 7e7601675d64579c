//! Stage orchestration: labels, subgraphs, embedding, training, selection
//! and evaluation, each reproducible from the run configuration alone.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{Baseline, RunConfig};
use crate::diffusion::{
    generate_labels, DiffusionConfig, DiffusionModel, InfluenceLabels, UNBOUNDED_STEPS,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    centrality_baseline, evaluation_seed, greedy_baseline, random_baseline, run_comparison,
    EvalReport, SeedSet,
};
use crate::glain::{self, SubgraphContext};
use crate::matrix::Matrix;
use crate::multiplex::{load_edge_list, IdMap, MultilayerNetwork};
use crate::regressor::select_seeds;
use crate::sampler::{extract_all, EgoInfSubgraph, SamplerConfig};
use crate::seeding::{derive, stage};
use crate::synth::generate_synthetic;
use crate::training::{train, TrainedModel, TrainingConfig, Variant};

/// Network under study with its original node identifiers.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub network: MultilayerNetwork,
    pub id_map: Option<IdMap>,
    pub source: String,
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    match (&cfg.dataset, &cfg.synthetic) {
        (Some(path), _) => {
            let loaded = load_edge_list(path, None)?;
            if loaded.dropped.total() > 0 {
                log::warn!(
                    "dropped {} self-loops and {} duplicate edges from {}",
                    loaded.dropped.self_loops,
                    loaded.dropped.duplicates,
                    path.display()
                );
            }
            Ok(Dataset {
                network: loaded.network,
                id_map: Some(loaded.id_map),
                source: path.display().to_string(),
            })
        }
        (None, Some(spec)) => Ok(Dataset {
            network: generate_synthetic(spec, cfg.synth_seed)?,
            id_map: None,
            source: format!("synthetic block model, {} nodes", spec.nodes),
        }),
        (None, None) => Err(Error::invalid(
            "config names neither `dataset` nor a synthetic network",
        )),
    }
}

/// Substream seeds of every stochastic stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSeeds {
    pub master: u64,
    pub labels: u64,
    pub subgraphs: u64,
    pub training: u64,
    pub random_baseline: u64,
    pub greedy: u64,
}

impl StageSeeds {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            labels: derive(master, &[stage::LABELS]),
            subgraphs: derive(master, &[stage::SUBGRAPHS]),
            training: derive(master, &[stage::TRAIN_INIT]),
            random_baseline: master,
            greedy: master,
        }
    }
}

/// Multi-SIR configuration at the configured `beta`, `gamma` and `theta`.
pub fn sir_config(
    net: &MultilayerNetwork,
    cfg: &RunConfig,
    runs: usize,
) -> Result<DiffusionConfig> {
    model_config(net, cfg, DiffusionModel::Sir, runs)
}

pub fn model_config(
    net: &MultilayerNetwork,
    cfg: &RunConfig,
    model: DiffusionModel,
    runs: usize,
) -> Result<DiffusionConfig> {
    let layers = net.layer_count();
    let theta = crate::diffusion::broadcast(&cfg.theta, layers, "theta")?;
    let p = cfg.p.resolve(net)?;
    let beta = match model {
        DiffusionModel::Sir => cfg.beta.resolve(net)?,
        _ => p.clone(),
    };
    let out = DiffusionConfig {
        per_layer_p: p,
        per_layer_beta: beta,
        gamma: cfg.gamma,
        theta,
        max_steps: UNBOUNDED_STEPS,
        runs,
    };
    out.validate(layers)?;
    Ok(out)
}

pub fn sampler_config(net: &MultilayerNetwork, cfg: &RunConfig) -> Result<SamplerConfig> {
    let layers = net.layer_count();
    let mut s = SamplerConfig::new(
        cfg.p.resolve(net)?,
        crate::diffusion::broadcast(&cfg.theta, layers, "theta")?,
        cfg.step,
    );
    s.repeats = cfg.subgraph_repeats;
    Ok(s)
}

pub fn labels(net: &MultilayerNetwork, cfg: &RunConfig) -> Result<InfluenceLabels> {
    let seeds = StageSeeds::new(cfg.master_seed);
    generate_labels(net, &sir_config(net, cfg, cfg.label_runs)?, seeds.labels)
}

pub fn subgraphs(net: &MultilayerNetwork, cfg: &RunConfig) -> Result<Vec<EgoInfSubgraph>> {
    let seeds = StageSeeds::new(cfg.master_seed);
    extract_all(net, &sampler_config(net, cfg)?, seeds.subgraphs)
}

/// Subgraph contexts with readouts rescaled, and the root structural features.
pub fn embedding_inputs(
    net: &MultilayerNetwork,
    subs: &[EgoInfSubgraph],
) -> (Vec<SubgraphContext>, Matrix) {
    let mut contexts = glain::prepare_contexts(subs, net);
    let scale = glain::scale_readout(&mut contexts);
    log::debug!("readout weights divided by {scale}");
    (contexts, glain::root_features(net, subs))
}

pub fn training_config(cfg: &RunConfig, variant: Variant) -> TrainingConfig {
    TrainingConfig {
        epochs: cfg.epochs,
        learning_rate: cfg.lr,
        hidden: cfg.hidden,
        mode: cfg.train_mode,
        variant,
        embed_dim: cfg.embed_dim,
        glain_layers: cfg.glain_layers,
        communities: cfg.kmeans_k,
        tau: cfg.tau,
        recluster_every: cfg.recluster_every,
        monitor_fraction: cfg.monitor_fraction,
        seed: StageSeeds::new(cfg.master_seed).training,
    }
}

/// Everything produced up to seed selection.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub labels: InfluenceLabels,
    pub subgraphs: Vec<EgoInfSubgraph>,
    pub model: TrainedModel,
    pub k: usize,
    pub seeds: Vec<usize>,
}

/// Trains on precomputed labels and subgraphs and selects `k` seeds.
pub fn fit_and_select(
    net: &MultilayerNetwork,
    cfg: &RunConfig,
    variant: Variant,
    labels: &InfluenceLabels,
    subs: &[EgoInfSubgraph],
) -> Result<(TrainedModel, Vec<usize>)> {
    let (contexts, roots) = embedding_inputs(net, subs);
    let model = train(
        &contexts,
        &roots,
        &labels.scores,
        &training_config(cfg, variant),
    )?;
    let k = cfg.k.resolve(net.node_count())?;
    let seeds = select_seeds(&model.scores, k)?;
    Ok((model, seeds))
}

pub fn run_model(net: &MultilayerNetwork, cfg: &RunConfig, variant: Variant) -> Result<ModelRun> {
    let labels = labels(net, cfg)?;
    let subs = subgraphs(net, cfg)?;
    let (model, seeds) = fit_and_select(net, cfg, variant, &labels, &subs)?;
    Ok(ModelRun {
        labels,
        subgraphs: subs,
        k: seeds.len(),
        model,
        seeds,
    })
}

/// Seed sets of the configured baselines.
pub fn baseline_seed_sets(
    net: &MultilayerNetwork,
    cfg: &RunConfig,
    k: usize,
) -> Result<Vec<SeedSet>> {
    let seeds = StageSeeds::new(cfg.master_seed);
    cfg.baselines
        .iter()
        .map(|b| match b {
            Baseline::Centrality(c) => centrality_baseline(net, *c, k),
            Baseline::Random => random_baseline(net, k, seeds.random_baseline),
            Baseline::Greedy => {
                let greedy_cfg = sir_config(net, cfg, cfg.greedy_runs)?;
                greedy_baseline(net, DiffusionModel::Sir, &greedy_cfg, k, seeds.greedy)
            }
        })
        .collect()
}

pub fn evaluate(net: &MultilayerNetwork, cfg: &RunConfig, sets: &[SeedSet]) -> Result<EvalReport> {
    let models = cfg
        .models
        .iter()
        .map(|&m| Ok((m, model_config(net, cfg, m, cfg.eval_runs)?)))
        .collect::<Result<Vec<_>>>()?;
    run_comparison(net, sets, &models, cfg.master_seed)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// Files written by [`run_all`], in write order.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub report: EvalReport,
    pub seeds: Vec<usize>,
}

/// Scores CSV `node_id,score,label` with original identifiers when known.
pub fn scores_csv(scores: &[f64], labels: &[f64], ids: Option<&IdMap>) -> String {
    let mut out = String::from("node_id,score,label\n");
    for (v, (s, y)) in scores.iter().zip(labels).enumerate() {
        let id = ids
            .and_then(|m| m.original(v))
            .map_or_else(|| v.to_string(), str::to_string);
        let _ = writeln!(out, "{id},{s:.16e},{y:.16e}");
    }
    out
}

/// Seeds JSON with sorted keys.
pub fn seeds_json(method: &str, seeds: &[usize], ids: Option<&IdMap>) -> String {
    let originals: Vec<String> = seeds
        .iter()
        .map(|&v| {
            ids.and_then(|m| m.original(v))
                .map_or_else(|| v.to_string(), str::to_string)
        })
        .collect();
    let value = serde_json::json!({
        "k": seeds.len(),
        "method": method,
        "original_ids": originals,
        "seeds": seeds,
    });
    serde_json::to_string_pretty(&value).expect("json") + "\n"
}

fn manifest(
    cfg: &RunConfig,
    dataset: &Dataset,
    variant: Variant,
    files: &[PathBuf],
    timestamp: u64,
) -> String {
    let s = StageSeeds::new(cfg.master_seed);
    let mut evaluation = serde_json::Map::new();
    for &m in &cfg.models {
        evaluation.insert(
            m.name().to_string(),
            evaluation_seed(cfg.master_seed, m).into(),
        );
    }
    let names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    let value = serde_json::json!({
        "artifacts": names,
        "config": cfg.to_text(),
        "dataset": dataset.source,
        "method": variant.method_name(),
        "seeds": {
            "evaluation": evaluation,
            "greedy": s.greedy,
            "labels": s.labels,
            "master": s.master,
            "network": cfg.synth_seed,
            "random_baseline": s.random_baseline,
            "subgraphs": s.subgraphs,
            "training": s.training,
        },
        "timestamp": timestamp,
        "version": env!("CARGO_PKG_VERSION"),
    });
    serde_json::to_string_pretty(&value).expect("json") + "\n"
}

/// Header lines for the model bundle.
fn provenance(cfg: &RunConfig, label_cfg: &DiffusionConfig) -> Vec<String> {
    let mut lines: Vec<String> = cfg
        .to_text()
        .lines()
        .map(|l| format!("config {l}"))
        .collect();
    lines.push(format!(
        "labels model=Multi-SIR master_seed={} runs={} beta={:?} theta={:?} gamma={}",
        StageSeeds::new(cfg.master_seed).labels,
        label_cfg.runs,
        label_cfg.per_layer_beta,
        label_cfg.theta,
        label_cfg.gamma
    ));
    lines
}

/// Whole pipeline with every artifact written under `out`. On failure the
/// files written so far are removed.
pub fn run_all(cfg: &RunConfig, variant: Variant, out: &Path, timestamp: u64) -> Result<Artifacts> {
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let result = run_all_inner(cfg, variant, out, timestamp, &mut files);
    if result.is_err() {
        for f in &files {
            let _ = fs::remove_file(f);
        }
    }
    result
}

fn stage_err(stage: &str, e: Error) -> Error {
    log::error!("stage `{stage}` failed: {e}");
    e
}

fn run_all_inner(
    cfg: &RunConfig,
    variant: Variant,
    out: &Path,
    timestamp: u64,
    files: &mut Vec<PathBuf>,
) -> Result<Artifacts> {
    let dataset = load_dataset(cfg).map_err(|e| stage_err("load", e))?;
    let net = &dataset.network;
    let ids = dataset.id_map.as_ref();
    log::info!(
        "loaded {} ({} nodes, {} layers)",
        dataset.source,
        net.node_count(),
        net.layer_count()
    );
    if let Some(map) = ids {
        files.push(write(out, "idmap.csv", &map.to_csv())?);
    }

    let label_cfg = sir_config(net, cfg, cfg.label_runs)?;
    let labels = labels(net, cfg).map_err(|e| stage_err("labels", e))?;
    files.push(write(
        out,
        "labels.csv",
        &labels.to_csv(&label_cfg, StageSeeds::new(cfg.master_seed).labels),
    )?);

    let subs = subgraphs(net, cfg).map_err(|e| stage_err("subgraphs", e))?;
    files.push(write(
        out,
        "subgraphs.txt",
        &crate::sampler::subgraphs_to_text(&subs),
    )?);

    let (model, seeds) =
        fit_and_select(net, cfg, variant, &labels, &subs).map_err(|e| stage_err("train", e))?;
    files.push(write(
        out,
        "model.txt",
        &model.to_text(&provenance(cfg, &label_cfg)),
    )?);
    if let Some(c) = &model.communities {
        files.push(write(out, "communities.csv", &c.to_csv())?);
    }
    files.push(write(
        out,
        "scores.csv",
        &scores_csv(&model.scores, &labels.scores, ids),
    )?);
    files.push(write(
        out,
        "seeds.json",
        &seeds_json(variant.method_name(), &seeds, ids),
    )?);

    let mut sets = vec![SeedSet::new(variant.method_name(), seeds.clone())];
    sets.extend(baseline_seed_sets(net, cfg, seeds.len()).map_err(|e| stage_err("baselines", e))?);
    let report = evaluate(net, cfg, &sets).map_err(|e| stage_err("evaluate", e))?;
    files.push(write(out, "report.csv", &report.to_csv())?);

    let manifest_path = out.join("manifest.json");
    files.push(manifest_path.clone());
    fs::write(
        &manifest_path,
        manifest(cfg, &dataset, variant, files, timestamp),
    )?;
    log::info!("{} seeds written to {}", seeds.len(), out.display());
    Ok(Artifacts {
        files: files.clone(),
        report,
        seeds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub step: usize,
    pub influence: f64,
    pub d_avg: Option<f64>,
}

/// Re-runs subgraph sampling, training and selection for every step with
/// shared labels and seeds; scores each seed set under Multi-SIR.
pub fn step_sweep(
    net: &MultilayerNetwork,
    cfg: &RunConfig,
    steps: &[usize],
    variant: Variant,
) -> Result<Vec<SweepRow>> {
    if steps.is_empty() {
        return Err(Error::invalid("step sweep needs at least one step"));
    }
    let labels = labels(net, cfg)?;
    let eval_cfg = sir_config(net, cfg, cfg.eval_runs)?;
    steps
        .iter()
        .map(|&step| {
            let mut c = cfg.clone();
            c.step = step;
            let subs = subgraphs(net, &c)?;
            let (_, seeds) = fit_and_select(net, &c, variant, &labels, &subs)?;
            let report = run_comparison(
                net,
                &[SeedSet::new(variant.method_name(), seeds)],
                &[(DiffusionModel::Sir, eval_cfg.clone())],
                cfg.master_seed,
            )?;
            let row = &report.rows[0];
            Ok(SweepRow {
                step,
                influence: row.influence.mean,
                d_avg: row.d_avg.map(|d| d.value),
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("step,N_k,D_avg\n");
    for r in rows {
        let d = r
            .d_avg
            .map_or_else(|| "NA".to_string(), |d| format!("{d:.6}"));
        let _ = writeln!(out, "{},{:.6},{}", r.step, r.influence, d);
    }
    out
}

/// Table-1 style statistics.
pub fn stats_table(net: &MultilayerNetwork) -> String {
    let mut out = String::from("layer,nodes,edges,avg_degree,beta_th\n");
    for (i, s) in net.all_layer_stats().iter().enumerate() {
        let beta = s
            .infection_threshold
            .map_or_else(|| "undefined".to_string(), |b| format!("{b:.3}"));
        let _ = writeln!(
            out,
            "{},{},{},{:.2},{}",
            i + 1,
            s.nodes,
            s.edges,
            s.avg_degree,
            beta
        );
    }
    out
}
