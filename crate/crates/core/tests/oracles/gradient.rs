//! Central finite differences and the random 10-node training instances
//! they are checked on.

use infmde::glain::{self, SubgraphContext};
use infmde::matrix::Matrix;
use infmde::sampler::{extract_all, SamplerConfig};
use infmde::synth::generate_gnm;
use infmde::training::{init_params, Objective, TrainingConfig, TrainingData, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Below this magnitude both values are treated as zero.
pub const FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

pub fn central_difference(values: &[f64], i: usize, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let mut v = values.to_vec();
    v[i] = values[i] + STEP;
    let up = f(&v);
    v[i] = values[i] - STEP;
    let down = f(&v);
    (up - down) / (2.0 * STEP)
}

pub struct Instance {
    pub contexts: Vec<SubgraphContext>,
    pub roots: Matrix,
    pub labels: Vec<f64>,
    pub community: Vec<(f64, usize)>,
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 10;
    let edges = [rng.random_range(10..20), rng.random_range(8..16)];
    let net = generate_gnm(n, &edges, seed).unwrap();
    let sampler = SamplerConfig::new(vec![0.6, 0.6], vec![0.5, 0.5], 3);
    let subs = extract_all(&net, &sampler, seed).unwrap();
    let mut contexts = glain::prepare_contexts(&subs, &net);
    glain::scale_readout(&mut contexts);
    let roots = glain::root_features(&net, &subs);
    let labels = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let community = (0..n)
        .map(|_| (rng.random_range(1.0..6.0), rng.random_range(1..3)))
        .collect();
    Instance {
        contexts,
        roots,
        labels,
        community,
    }
}

/// Largest relative error over every trainable parameter of `variant`.
pub fn worst_model_error(
    inst: &Instance,
    variant: Variant,
    seed: u64,
    mask: Option<&[bool]>,
) -> f64 {
    let data = TrainingData {
        contexts: &inst.contexts,
        root_features: &inst.roots,
        labels: &inst.labels,
        train_mask: mask,
    };
    let cfg = TrainingConfig {
        variant,
        embed_dim: 6,
        hidden: 8,
        seed,
        ..TrainingConfig::default()
    };
    let mut params = init_params(&cfg, &data);
    if let Some(g) = params.glain.as_mut() {
        g.damping_bias = 0.3;
    }
    let objective = Objective {
        data: &data,
        variant,
        community: &inst.community,
    };
    let (_, grads) = objective.loss_and_grad(&params, true).unwrap();
    let analytic = grads.to_vec();
    let values = params.to_vec();
    assert_eq!(analytic.len(), values.len());
    let loss = |v: &[f64]| objective.loss(&params.with_values(v).unwrap()).unwrap();
    (0..values.len())
        .map(|i| relative_error(analytic[i], central_difference(&values, i, &loss)))
        .fold(0.0, f64::max)
}
