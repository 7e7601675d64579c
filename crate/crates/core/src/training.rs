//! End-to-end fitting of embeddings and regressor to influence labels.

use std::fmt::Write as _;

use crate::differentiation::{
    community_features, concat_embedding, default_k, distance_backward, distance_embedding, kmeans,
    CommunityAssignment, DEFAULT_MAX_ITER, DEFAULT_TAU,
};
use crate::error::{Error, Result};
use crate::glain::{self, GlainGrads, GlainParams, SubgraphContext, Tape};
use crate::matrix::Matrix;
use crate::regressor::{mse_grad, mse_loss, Mlp, MlpGrads, DEFAULT_HIDDEN};
use crate::seeding::{derive, stage, stream_rng};

pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_LR: f64 = 0.01;
pub const DEFAULT_RECLUSTER: usize = 50;

/// Which parts of the embedding pipeline feed the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Subgraph embedding, then community and distance features.
    Full,
    /// Community and distance features over raw structural features.
    NoGlain,
    /// Subgraph embedding straight into the regressor.
    NoDifferentiation,
}

impl Variant {
    pub fn method_name(self) -> &'static str {
        match self {
            Variant::Full => "Inf-MDE",
            Variant::NoGlain => "Inf-MD",
            Variant::NoDifferentiation => "Inf-ME",
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoGlain => "no-glain",
            Variant::NoDifferentiation => "no-differentiation",
        }
    }

    fn from_tag(s: &str) -> Option<Self> {
        [Variant::Full, Variant::NoGlain, Variant::NoDifferentiation]
            .into_iter()
            .find(|v| v.tag() == s)
    }

    fn uses_glain(self) -> bool {
        self != Variant::NoGlain
    }

    fn uses_communities(self) -> bool {
        self != Variant::NoDifferentiation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    Joint,
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub mode: TrainMode,
    pub variant: Variant,
    pub embed_dim: usize,
    pub glain_layers: usize,
    /// Community count; `None` picks [`default_k`].
    pub communities: Option<usize>,
    pub tau: f64,
    pub recluster_every: usize,
    /// Share of nodes held out of the loss and tracked separately.
    pub monitor_fraction: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            learning_rate: DEFAULT_LR,
            hidden: DEFAULT_HIDDEN,
            mode: TrainMode::Joint,
            variant: Variant::Full,
            embed_dim: glain::DEFAULT_DIM,
            glain_layers: glain::DEFAULT_LAYERS,
            communities: None,
            tau: DEFAULT_TAU,
            recluster_every: DEFAULT_RECLUSTER,
            monitor_fraction: 0.0,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.hidden == 0 || self.embed_dim == 0 {
            return Err(Error::invalid(
                "hidden width and embedding dimension must be at least 1",
            ));
        }
        if self.recluster_every == 0 {
            return Err(Error::invalid("recluster interval must be at least 1"));
        }
        if !(self.tau >= 1.0) {
            return Err(Error::invalid(format!(
                "overlap tau must be >= 1, got {}",
                self.tau
            )));
        }
        if !(0.0..1.0).contains(&self.monitor_fraction) {
            return Err(Error::invalid(format!(
                "monitor fraction must be in [0, 1), got {}",
                self.monitor_fraction
            )));
        }
        Ok(())
    }
}

/// Trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub glain: Option<GlainParams>,
    pub mlp: Mlp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub glain: Option<GlainGrads>,
    pub mlp: MlpGrads,
}

impl ModelParams {
    /// All parameters in a fixed order: GLAIN projection, damping weight,
    /// damping bias, then regressor `w1, b1, w2, b2`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::new();
        if let Some(g) = &self.glain {
            v.extend_from_slice(g.input_proj.as_slice());
            v.extend_from_slice(&g.damping_weight);
            v.push(g.damping_bias);
        }
        v.extend_from_slice(self.mlp.w1.as_slice());
        v.extend_from_slice(&self.mlp.b1);
        v.extend_from_slice(&self.mlp.w2);
        v.push(self.mlp.b2);
        v
    }

    /// Inverse of [`ModelParams::to_vec`] using `self` for the shapes.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        let mut it = values.iter().copied();
        let mut fill = |dst: &mut [f64]| -> Result<()> {
            for d in dst {
                *d = it
                    .next()
                    .ok_or_else(|| Error::Shape("too few parameter values".into()))?;
            }
            Ok(())
        };
        if let Some(g) = out.glain.as_mut() {
            fill(g.input_proj.as_mut_slice())?;
            fill(&mut g.damping_weight)?;
            fill(std::slice::from_mut(&mut g.damping_bias))?;
        }
        fill(out.mlp.w1.as_mut_slice())?;
        fill(&mut out.mlp.b1)?;
        fill(&mut out.mlp.w2)?;
        fill(std::slice::from_mut(&mut out.mlp.b2))?;
        if it.next().is_some() {
            return Err(Error::Shape("too many parameter values".into()));
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.mlp.is_finite() && self.glain.as_ref().is_none_or(GlainParams::is_finite)
    }
}

impl ModelGrads {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::new();
        if let Some(g) = &self.glain {
            v.extend_from_slice(g.input_proj.as_slice());
            v.extend_from_slice(&g.damping_weight);
            v.push(g.damping_bias);
        }
        v.extend_from_slice(self.mlp.w1.as_slice());
        v.extend_from_slice(&self.mlp.b1);
        v.extend_from_slice(&self.mlp.w2);
        v.push(self.mlp.b2);
        v
    }
}

/// Fixed inputs of training: subgraph contexts, the structural feature
/// fallback embedding, and standardized labels.
pub struct TrainingData<'a> {
    pub contexts: &'a [SubgraphContext],
    pub root_features: &'a Matrix,
    pub labels: &'a [f64],
    /// Nodes whose labels enter the loss; `None` means all of them.
    pub train_mask: Option<&'a [bool]>,
}

impl TrainingData<'_> {
    fn fit_loss(&self, pred: &[f64]) -> Result<f64> {
        match self.train_mask {
            None => mse_loss(pred, self.labels),
            Some(mask) => {
                let (p, y) = masked(pred, self.labels, mask, true);
                mse_loss(&p, &y)
            }
        }
    }

    fn fit_grad(&self, pred: &[f64]) -> Vec<f64> {
        match self.train_mask {
            None => mse_grad(pred, self.labels),
            Some(mask) => {
                let (p, y) = masked(pred, self.labels, mask, true);
                let mut inner = mse_grad(&p, &y).into_iter();
                mask.iter()
                    .map(|&m| if m { inner.next().unwrap_or(0.0) } else { 0.0 })
                    .collect()
            }
        }
    }
}

/// Predictions and labels of the nodes whose mask equals `keep`.
fn masked(pred: &[f64], labels: &[f64], mask: &[bool], keep: bool) -> (Vec<f64>, Vec<f64>) {
    pred.iter()
        .zip(labels)
        .zip(mask)
        .filter(|(_, &m)| m == keep)
        .map(|((&p, &y), _)| (p, y))
        .unzip()
}

/// `round(fraction * n)` nodes drawn from the monitoring substream, at least
/// one and never all of them. Empty when `fraction` is zero.
pub fn monitor_split(n: usize, fraction: f64, seed: u64) -> Vec<usize> {
    if fraction <= 0.0 || n < 2 {
        return Vec::new();
    }
    let m = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = stream_rng(seed, &[stage::MONITOR]);
    let mut held = rand::seq::index::sample(&mut rng, n, m).into_vec();
    held.sort_unstable();
    held
}

/// Embedding fed to the regressor plus what the backward pass needs.
struct Forward {
    base: Matrix,
    tapes: Vec<Tape>,
    distances: Option<Matrix>,
    input: Matrix,
}

/// Loss of the model on fixed data with community scalars held constant.
pub struct Objective<'a> {
    pub data: &'a TrainingData<'a>,
    pub variant: Variant,
    /// Per-node `(csize, coverlap)`; ignored without communities.
    pub community: &'a [(f64, usize)],
}

impl Objective<'_> {
    fn base_embedding(&self, params: &ModelParams) -> (Matrix, Vec<Tape>) {
        match &params.glain {
            Some(g) => glain::forward_all(self.data.contexts, g),
            None => (self.data.root_features.clone(), Vec::new()),
        }
    }

    fn forward(&self, params: &ModelParams) -> Result<Forward> {
        let (base, tapes) = self.base_embedding(params);
        if !base.is_finite() {
            return Err(Error::NonFinite("subgraph embeddings".into()));
        }
        if self.variant.uses_communities() {
            let distances = distance_embedding(&base);
            let input = concat_embedding(self.community, &distances)?;
            Ok(Forward {
                base,
                tapes,
                distances: Some(distances),
                input,
            })
        } else {
            Ok(Forward {
                input: base.clone(),
                base,
                tapes,
                distances: None,
            })
        }
    }

    /// Regressor input for the given parameters.
    pub fn embedding(&self, params: &ModelParams) -> Result<Matrix> {
        Ok(self.forward(params)?.input)
    }

    pub fn loss(&self, params: &ModelParams) -> Result<f64> {
        let f = self.forward(params)?;
        let (pred, _) = params.mlp.forward(&f.input)?;
        self.data.fit_loss(&pred)
    }

    /// Loss and gradient. GLAIN gradients are produced when `through_embedding`
    /// holds and the model has GLAIN parameters.
    pub fn loss_and_grad(
        &self,
        params: &ModelParams,
        through_embedding: bool,
    ) -> Result<(f64, ModelGrads)> {
        self.step(params, through_embedding)
            .map(|(loss, grads, _)| (loss, grads))
    }

    /// [`Self::loss_and_grad`] plus the predictions it was computed from.
    fn step(
        &self,
        params: &ModelParams,
        through_embedding: bool,
    ) -> Result<(f64, ModelGrads, Vec<f64>)> {
        let f = self.forward(params)?;
        let (pred, cache) = params.mlp.forward(&f.input)?;
        let loss = self.data.fit_loss(&pred)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss {loss}")));
        }
        let (mlp_grads, grad_input) =
            params
                .mlp
                .backward(&f.input, &cache, &self.data.fit_grad(&pred));
        let glain_grads = match (&params.glain, through_embedding) {
            (Some(g), true) => {
                let grad_base = match &f.distances {
                    Some(d) => {
                        let n = d.rows();
                        let mut grad_dist = Matrix::zeros(n, n);
                        for v in 0..n {
                            grad_dist
                                .row_mut(v)
                                .copy_from_slice(&grad_input.row(v)[2..]);
                        }
                        distance_backward(&f.base, d, &grad_dist)
                    }
                    None => grad_input,
                };
                Some(glain::backward(
                    self.data.contexts,
                    &f.tapes,
                    g,
                    &grad_base,
                )?)
            }
            _ => None,
        };
        Ok((
            loss,
            ModelGrads {
                glain: glain_grads,
                mlp: mlp_grads,
            },
            pred,
        ))
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub variant: Variant,
    pub params: ModelParams,
    pub label_mean: f64,
    pub label_std: f64,
    pub communities: Option<CommunityAssignment>,
    pub community_features: Vec<(f64, usize)>,
    /// Loss before each update.
    pub loss_trace: Vec<f64>,
    pub final_loss: f64,
    /// Nodes held out of the loss, ascending.
    pub monitor_nodes: Vec<usize>,
    /// Held-out loss before each update; empty without a monitoring split.
    pub monitor_trace: Vec<f64>,
    /// Final regressor input, one row per node.
    pub embedding: Matrix,
    /// Predicted scores in label units.
    pub scores: Vec<f64>,
}

fn cluster(base: &Matrix, cfg: &TrainingConfig, round: usize) -> Result<CommunityAssignment> {
    let k = cfg.communities.unwrap_or_else(|| default_k(base.rows()));
    kmeans(
        base,
        k.min(base.rows()),
        DEFAULT_MAX_ITER,
        derive(cfg.seed, &[round as u64]),
        cfg.tau,
    )
}

/// Initial parameters for `data` under `cfg`.
pub fn init_params(cfg: &TrainingConfig, data: &TrainingData) -> ModelParams {
    let mut rng = stream_rng(cfg.seed, &[stage::TRAIN_INIT]);
    let feature_dim = data.root_features.cols();
    let glain = cfg
        .variant
        .uses_glain()
        .then(|| GlainParams::init(feature_dim, cfg.embed_dim, cfg.glain_layers, &mut rng));
    let n = data.labels.len();
    let inputs = match cfg.variant {
        Variant::NoDifferentiation => cfg.embed_dim,
        _ => n + 2,
    };
    ModelParams {
        glain,
        mlp: Mlp::init(inputs, cfg.hidden, &mut rng),
    }
}

/// Full-batch gradient descent on standardized labels.
pub fn train(
    contexts: &[SubgraphContext],
    root_features: &Matrix,
    labels: &[f64],
    cfg: &TrainingConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if contexts.len() != n || root_features.rows() != n {
        return Err(Error::Shape(format!(
            "{} labels, {} subgraphs, {} feature rows",
            n,
            contexts.len(),
            root_features.rows()
        )));
    }
    let monitor_nodes = monitor_split(n, cfg.monitor_fraction, cfg.seed);
    let mut mask = vec![true; n];
    for &v in &monitor_nodes {
        mask[v] = false;
    }
    // standardize with training labels only so held-out labels stay unseen
    let fit_labels: Vec<f64> = labels
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(&y, _)| y)
        .collect();
    let m = fit_labels.len() as f64;
    let label_mean = fit_labels.iter().sum::<f64>() / m;
    let label_std = {
        let var = fit_labels
            .iter()
            .map(|y| (y - label_mean).powi(2))
            .sum::<f64>()
            / m;
        if var.sqrt() > 1e-12 {
            var.sqrt()
        } else {
            1.0
        }
    };
    let targets: Vec<f64> = labels
        .iter()
        .map(|y| (y - label_mean) / label_std)
        .collect();
    let data = TrainingData {
        contexts,
        root_features,
        labels: &targets,
        train_mask: (!monitor_nodes.is_empty()).then_some(&mask[..]),
    };
    let mut params = init_params(cfg, &data);
    let joint = cfg.mode == TrainMode::Joint && params.glain.is_some();

    let base_of = |p: &ModelParams| -> Matrix {
        match &p.glain {
            Some(g) => glain::embed_all(contexts, g),
            None => root_features.clone(),
        }
    };

    let mut communities = None;
    let mut features = vec![(1.0, 1); n];
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut monitor_trace = Vec::new();
    let mut round = 0;
    for epoch in 0..cfg.epochs {
        if cfg.variant.uses_communities()
            && (communities.is_none() || (joint && epoch % cfg.recluster_every == 0))
        {
            let assignment = cluster(&base_of(&params), cfg, round)?;
            features = community_features(&assignment);
            communities = Some(assignment);
            round += 1;
        }
        let objective = Objective {
            data: &data,
            variant: cfg.variant,
            community: &features,
        };
        let (loss, grads, pred) = objective.step(&params, joint)?;
        loss_trace.push(loss);
        if !monitor_nodes.is_empty() {
            let (p, y) = masked(&pred, &targets, &mask, false);
            monitor_trace.push(mse_loss(&p, &y)?);
        }
        params.mlp.apply(&grads.mlp, cfg.learning_rate);
        if let (Some(g), Some(gg)) = (params.glain.as_mut(), grads.glain.as_ref()) {
            g.apply(gg, cfg.learning_rate);
        }
        if !params.is_finite() {
            return Err(Error::NonFinite(format!("parameters after epoch {epoch}")));
        }
    }
    log::debug!(
        "training: loss {:.6} -> {:.6} over {} epochs",
        loss_trace[0],
        loss_trace[loss_trace.len() - 1],
        cfg.epochs
    );
    if let (Some(first), Some(last)) = (monitor_trace.first(), monitor_trace.last()) {
        log::info!(
            "held-out loss on {} nodes: {first:.6} -> {last:.6}",
            monitor_nodes.len()
        );
    }

    let objective = Objective {
        data: &data,
        variant: cfg.variant,
        community: &features,
    };
    let embedding = objective.embedding(&params)?;
    let pred = params.mlp.predict(&embedding)?;
    let final_loss = data.fit_loss(&pred)?;
    if !final_loss.is_finite() {
        return Err(Error::NonFinite("final training loss".into()));
    }
    let scores = pred.iter().map(|p| p * label_std + label_mean).collect();
    Ok(TrainedModel {
        variant: cfg.variant,
        params,
        label_mean,
        label_std,
        communities,
        community_features: features,
        loss_trace,
        final_loss,
        monitor_nodes,
        monitor_trace,
        embedding,
        scores,
    })
}

const BUNDLE_VERSION: &str = "infmde-model 1";

fn push_values(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    for v in values {
        let _ = write!(out, " {v:.16e}");
    }
    out.push('\n');
}

impl TrainedModel {
    /// Versioned text bundle. `header` lines are written as `#` comments.
    pub fn to_text(&self, header: &[String]) -> String {
        let mut out = format!("{BUNDLE_VERSION}\n");
        for line in header {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "variant {}", self.variant.tag());
        push_values(&mut out, "label_mean", &[self.label_mean]);
        push_values(&mut out, "label_std", &[self.label_std]);
        if let Some(g) = &self.params.glain {
            let _ = writeln!(out, "glain {} {} {}", g.layers, g.feature_dim(), g.dim());
            push_values(&mut out, "input_proj", g.input_proj.as_slice());
            push_values(&mut out, "damping_weight", &g.damping_weight);
            push_values(&mut out, "damping_bias", &[g.damping_bias]);
        }
        let m = &self.params.mlp;
        let _ = writeln!(out, "mlp {} {}", m.inputs(), m.hidden());
        push_values(&mut out, "w1", m.w1.as_slice());
        push_values(&mut out, "b1", &m.b1);
        push_values(&mut out, "w2", &m.w2);
        push_values(&mut out, "b2", &[m.b2]);
        push_values(
            &mut out,
            "csize",
            &self
                .community_features
                .iter()
                .map(|f| f.0)
                .collect::<Vec<_>>(),
        );
        let overlap: Vec<String> = self
            .community_features
            .iter()
            .map(|f| f.1.to_string())
            .collect();
        let _ = writeln!(out, "coverlap {}", overlap.join(" "));
        out
    }
}

/// Parameters, label scaling and community scalars read back from a bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub variant: Variant,
    pub params: ModelParams,
    pub label_mean: f64,
    pub label_std: f64,
    pub community_features: Vec<(f64, usize)>,
}

impl ModelBundle {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == BUNDLE_VERSION => {}
            _ => return Err(bad(1, "missing model bundle version line")),
        }
        let mut fields: Vec<(usize, String, Vec<String>)> = Vec::new();
        for (i, l) in lines {
            let mut parts = l.split_whitespace().map(str::to_string);
            let key = parts.next().unwrap_or_default();
            fields.push((i + 1, key, parts.collect()));
        }
        let get = |key: &str| fields.iter().find(|f| f.1 == key);
        let floats = |key: &str| -> Result<Vec<f64>> {
            let (line, _, vals) = get(key).ok_or_else(|| bad(0, &format!("missing `{key}`")))?;
            vals.iter()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| bad(*line, &format!("bad number in `{key}`")))
                })
                .collect()
        };
        let ints = |key: &str| -> Result<Vec<usize>> {
            let (line, _, vals) = get(key).ok_or_else(|| bad(0, &format!("missing `{key}`")))?;
            vals.iter()
                .map(|v| {
                    v.parse::<usize>()
                        .map_err(|_| bad(*line, &format!("bad integer in `{key}`")))
                })
                .collect()
        };
        let scalar = |key: &str| -> Result<f64> {
            floats(key)?
                .first()
                .copied()
                .ok_or_else(|| bad(0, &format!("empty `{key}`")))
        };
        let variant_tag = get("variant")
            .and_then(|f| f.2.first().cloned())
            .unwrap_or_default();
        let variant = Variant::from_tag(&variant_tag).ok_or_else(|| bad(0, "unknown variant"))?;
        let glain = if get("glain").is_some() {
            let dims = ints("glain")?;
            if dims.len() != 3 {
                return Err(bad(0, "`glain` needs layers, feature_dim, dim"));
            }
            let proj = floats("input_proj")?;
            let damping_weight = floats("damping_weight")?;
            if proj.len() != dims[1] * dims[2] || damping_weight.len() != dims[2] {
                return Err(Error::Shape("GLAIN parameter lengths".into()));
            }
            Some(GlainParams {
                input_proj: Matrix::from_vec(dims[1], dims[2], proj),
                damping_weight,
                damping_bias: scalar("damping_bias")?,
                layers: dims[0],
            })
        } else {
            None
        };
        let dims = ints("mlp")?;
        if dims.len() != 2 {
            return Err(bad(0, "`mlp` needs inputs and hidden"));
        }
        let (w1, b1, w2) = (floats("w1")?, floats("b1")?, floats("w2")?);
        if w1.len() != dims[0] * dims[1] || b1.len() != dims[1] || w2.len() != dims[1] {
            return Err(Error::Shape("regressor parameter lengths".into()));
        }
        let csize = floats("csize")?;
        let coverlap = ints("coverlap")?;
        if csize.len() != coverlap.len() {
            return Err(Error::Shape("community feature lengths".into()));
        }
        Ok(Self {
            variant,
            params: ModelParams {
                glain,
                mlp: Mlp {
                    w1: Matrix::from_vec(dims[0], dims[1], w1),
                    b1,
                    w2,
                    b2: scalar("b2")?,
                },
            },
            label_mean: scalar("label_mean")?,
            label_std: scalar("label_std")?,
            community_features: csize.into_iter().zip(coverlap).collect(),
        })
    }

    /// Scores in label units for the given subgraph contexts.
    pub fn predict(
        &self,
        contexts: &[SubgraphContext],
        root_features: &Matrix,
    ) -> Result<Vec<f64>> {
        let labels = vec![0.0; contexts.len()];
        let data = TrainingData {
            contexts,
            root_features,
            labels: &labels,
            train_mask: None,
        };
        let objective = Objective {
            data: &data,
            variant: self.variant,
            community: &self.community_features,
        };
        let x = objective.embedding(&self.params)?;
        let pred = self.params.mlp.predict(&x)?;
        Ok(pred
            .iter()
            .map(|p| p * self.label_std + self.label_mean)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{generate_labels, DiffusionConfig};
    use crate::sampler::{extract_all, SamplerConfig};
    use crate::synth::{generate_synthetic, BlockModelSpec};

    fn fixture(n: usize) -> (Vec<SubgraphContext>, Matrix, Vec<f64>) {
        let net = generate_synthetic(&BlockModelSpec::new(n, 2, 3, 0.3, 0.05), 11).unwrap();
        let diff = DiffusionConfig::at_thresholds(&net, &[0.5], 200).unwrap();
        let labels = generate_labels(&net, &diff, 3).unwrap().scores;
        let subs = extract_all(&net, &SamplerConfig::from_diffusion(&diff), 5).unwrap();
        let mut contexts = glain::prepare_contexts(&subs, &net);
        glain::scale_readout(&mut contexts);
        (contexts, glain::root_features(&net, &subs), labels)
    }

    fn small_cfg(variant: Variant) -> TrainingConfig {
        TrainingConfig {
            epochs: 60,
            learning_rate: 0.01,
            hidden: 16,
            variant,
            embed_dim: 8,
            communities: Some(3),
            recluster_every: 20,
            seed: 9,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn constant_labels_give_constant_scores() {
        let (contexts, roots, labels) = fixture(20);
        let flat = vec![4.0; labels.len()];
        let cfg = TrainingConfig {
            mode: TrainMode::Frozen,
            seed: 9,
            ..TrainingConfig::default()
        };
        let model = train(&contexts, &roots, &flat, &cfg).unwrap();
        assert_eq!(model.label_std, 1.0);
        assert!(model.final_loss < 1e-3, "{}", model.final_loss);
        assert!(
            model.scores.iter().all(|s| (s - 4.0).abs() < 0.1),
            "{:?}",
            model.scores
        );
    }

    #[test]
    fn joint_training_descends() {
        let (contexts, roots, labels) = fixture(30);
        for variant in [Variant::Full, Variant::NoGlain, Variant::NoDifferentiation] {
            let cfg = TrainingConfig {
                seed: 9,
                variant,
                ..TrainingConfig::default()
            };
            let model = train(&contexts, &roots, &labels, &cfg).unwrap();
            assert_eq!(model.loss_trace.len(), 200);
            assert_eq!(model.scores.len(), 30);
            assert!(model.final_loss < model.loss_trace[0], "{variant:?}");
        }
    }

    #[test]
    fn structural_features_fit_closely() {
        let (contexts, roots, labels) = fixture(30);
        let cfg = TrainingConfig {
            seed: 9,
            variant: Variant::NoGlain,
            ..TrainingConfig::default()
        };
        let model = train(&contexts, &roots, &labels, &cfg).unwrap();
        assert!(model.final_loss < 0.5 * model.loss_trace[0]);
        let rises = model.loss_trace.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(
            rises * 20 <= model.loss_trace.len(),
            "{rises} rising epochs"
        );
    }

    #[test]
    fn training_is_deterministic() {
        let (contexts, roots, labels) = fixture(20);
        let cfg = small_cfg(Variant::Full);
        let a = train(&contexts, &roots, &labels, &cfg).unwrap();
        let b = train(&contexts, &roots, &labels, &cfg).unwrap();
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn bundle_round_trip_reproduces_scores() {
        let (contexts, roots, labels) = fixture(20);
        for variant in [Variant::Full, Variant::NoGlain, Variant::NoDifferentiation] {
            let model = train(&contexts, &roots, &labels, &small_cfg(variant)).unwrap();
            let text = model.to_text(&["labels runs=200".to_string()]);
            let bundle = ModelBundle::parse(&text).unwrap();
            assert_eq!(bundle.variant, variant);
            assert_eq!(bundle.params, model.params);
            assert_eq!(bundle.community_features, model.community_features);
            assert_eq!(bundle.predict(&contexts, &roots).unwrap(), model.scores);
        }
    }

    #[test]
    fn bundle_rejects_garbage() {
        assert!(ModelBundle::parse("").is_err());
        assert!(ModelBundle::parse("infmde-model 1\nvariant full\n").is_err());
        assert!(ModelBundle::parse("infmde-model 9\n").is_err());
    }

    #[test]
    fn shape_and_config_errors() {
        let (contexts, roots, labels) = fixture(20);
        assert!(matches!(
            train(&contexts, &roots, &labels[..5], &small_cfg(Variant::Full)),
            Err(Error::Shape(_))
        ));
        let cfg = TrainingConfig {
            epochs: 0,
            ..small_cfg(Variant::Full)
        };
        assert!(matches!(
            train(&contexts, &roots, &labels, &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn parameter_vector_round_trip() {
        let (contexts, roots, labels) = fixture(20);
        let data = TrainingData {
            contexts: &contexts,
            root_features: &roots,
            labels: &labels,
            train_mask: None,
        };
        let params = init_params(&small_cfg(Variant::Full), &data);
        let values = params.to_vec();
        assert_eq!(params.with_values(&values).unwrap(), params);
        assert!(params.with_values(&values[1..]).is_err());
    }

    #[test]
    fn monitoring_split_keeps_held_out_labels_unseen() {
        let (contexts, roots, labels) = fixture(30);
        let cfg = TrainingConfig {
            monitor_fraction: 0.1,
            ..small_cfg(Variant::Full)
        };
        let model = train(&contexts, &roots, &labels, &cfg).unwrap();
        assert_eq!(model.monitor_nodes.len(), 3);
        assert_eq!(model.monitor_trace.len(), cfg.epochs);
        assert!(model.monitor_trace.iter().all(|l| l.is_finite()));

        let mut shifted = labels.clone();
        for &v in &model.monitor_nodes {
            shifted[v] += 100.0;
        }
        let other = train(&contexts, &roots, &shifted, &cfg).unwrap();
        assert_eq!(other.params, model.params);
        assert_eq!(other.loss_trace, model.loss_trace);
        assert_ne!(other.monitor_trace, model.monitor_trace);

        let plain = train(&contexts, &roots, &labels, &small_cfg(Variant::Full)).unwrap();
        assert!(plain.monitor_nodes.is_empty() && plain.monitor_trace.is_empty());
    }

    #[test]
    fn monitor_split_sizes() {
        assert!(monitor_split(30, 0.0, 1).is_empty());
        assert_eq!(monitor_split(30, 0.1, 1).len(), 3);
        assert_eq!(monitor_split(5, 0.01, 1).len(), 1);
        assert_eq!(monitor_split(5, 0.99, 1).len(), 4);
        assert_eq!(monitor_split(30, 0.1, 1), monitor_split(30, 0.1, 1));
        assert!(monitor_split(1, 0.5, 1).is_empty());
    }
}
