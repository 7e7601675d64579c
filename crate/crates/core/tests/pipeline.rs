use std::fs;

use infmde::config::{RunConfig, SeedCount};
use infmde::diffusion::DiffusionModel;
use infmde::pipeline::{load_dataset, run_all, step_sweep, sweep_csv, StageSeeds};
use infmde::synth::BlockModelSpec;
use infmde::training::Variant;
use proptest::prelude::*;

fn small_config() -> RunConfig {
    RunConfig {
        synthetic: Some(BlockModelSpec::new(50, 2, 3, 0.25, 0.02)),
        synth_seed: 4,
        k: SeedCount::Absolute(5),
        epochs: 40,
        label_runs: 100,
        eval_runs: 100,
        embed_dim: 8,
        hidden: 16,
        master_seed: 12,
        ..RunConfig::default()
    }
}

const DETERMINISTIC: [&str; 6] = [
    "labels.csv",
    "subgraphs.txt",
    "model.txt",
    "scores.csv",
    "seeds.json",
    "report.csv",
];

#[test]
fn run_all_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let artifacts = run_all(&cfg, Variant::Full, dir.path(), 1).unwrap();
    for name in DETERMINISTIC
        .iter()
        .chain(&["communities.csv", "manifest.json"])
    {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    assert_eq!(artifacts.seeds.len(), 5);

    let seeds: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("seeds.json")).unwrap()).unwrap();
    let ids: Vec<u64> = seeds["seeds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    let mut distinct = ids.clone();
    distinct.sort_unstable();
    distinct.dedup();
    assert_eq!(distinct.len(), 5);
    assert_eq!(seeds["k"], 5);

    let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.starts_with("method,model,k,N_k,D_avg,runs,master_seed\n"));
    // model plus five baselines, three diffusion models each
    assert_eq!(report.lines().count(), 1 + 6 * 3);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    let s = StageSeeds::new(cfg.master_seed);
    let m = &manifest["seeds"];
    assert_eq!(m["labels"], s.labels);
    assert_eq!(m["subgraphs"], s.subgraphs);
    assert_eq!(m["training"], s.training);
    assert_eq!(m["random_baseline"], s.random_baseline);
    assert_eq!(m["greedy"], s.greedy);
    assert_eq!(m["network"], cfg.synth_seed);
    assert_eq!(m["evaluation"].as_object().unwrap().len(), 3);
    assert_eq!(manifest["timestamp"], 1);
    let echoed = RunConfig::parse(manifest["config"].as_str().unwrap()).unwrap();
    assert_eq!(echoed, cfg);
}

#[test]
fn run_all_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = small_config();
    run_all(&cfg, Variant::Full, a.path(), 1).unwrap();
    run_all(&cfg, Variant::Full, b.path(), 2).unwrap();
    for name in DETERMINISTIC {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn ablations_complete_with_comparable_rows() {
    let cfg = RunConfig {
        models: vec![DiffusionModel::Sir],
        ..small_config()
    };
    for variant in [Variant::NoGlain, Variant::NoDifferentiation] {
        let dir = tempfile::tempdir().unwrap();
        let artifacts = run_all(&cfg, variant, dir.path(), 0).unwrap();
        let row = artifacts
            .report
            .row(variant.method_name(), DiffusionModel::Sir)
            .unwrap();
        let dc = artifacts.report.row("DC", DiffusionModel::Sir).unwrap();
        assert_eq!(row.k, dc.k);
        assert_eq!(row.influence.runs, dc.influence.runs);
        assert!(row.influence.mean >= 5.0);
        assert_eq!(
            dir.path().join("communities.csv").exists(),
            variant == Variant::NoGlain
        );
    }
}

#[test]
fn failed_run_leaves_no_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        k: SeedCount::Absolute(500),
        ..small_config()
    };
    assert!(run_all(&cfg, Variant::Full, dir.path(), 0).is_err());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn step_sweep_rows() {
    let cfg = RunConfig {
        models: vec![DiffusionModel::Sir],
        ..small_config()
    };
    let net = load_dataset(&cfg).unwrap().network;
    let one = step_sweep(&net, &cfg, &[0], Variant::Full).unwrap();
    assert_eq!(one.len(), 1);
    let two = step_sweep(&net, &cfg, &[0, 2], Variant::Full).unwrap();
    assert_eq!(two[0], one[0]);
    let csv = sweep_csv(&two);
    assert!(csv.starts_with("step,N_k,D_avg\n"));
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(
        csv,
        sweep_csv(&step_sweep(&net, &cfg, &[0, 2], Variant::Full).unwrap())
    );
    assert!(step_sweep(&net, &cfg, &[], Variant::Full).is_err());
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        (0usize..10, 1usize..4, 0.0f64..1.0, 1.0f64..3.0, 1usize..500),
        (
            1u64..1000,
            proptest::option::of(1usize..20),
            1usize..100,
            prop::bool::ANY,
            1u32..200,
        ),
    )
        .prop_map(
            |((step, repeats, theta, tau, epochs), (seed, kk, k, frozen, pct))| RunConfig {
                step,
                subgraph_repeats: repeats,
                theta: vec![theta, 1.0 - theta],
                tau,
                epochs,
                master_seed: seed,
                kmeans_k: kk,
                k: if frozen {
                    SeedCount::Absolute(k)
                } else {
                    SeedCount::Percent(f64::from(pct) / 2.0)
                },
                train_mode: if frozen {
                    infmde::training::TrainMode::Frozen
                } else {
                    infmde::training::TrainMode::Joint
                },
                synthetic: frozen.then(|| BlockModelSpec::new(40, 2, 2, 0.3, 0.05)),
                ..RunConfig::default()
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip(cfg in arb_config()) {
        let text = cfg.to_text();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_text(), text);
    }
}
