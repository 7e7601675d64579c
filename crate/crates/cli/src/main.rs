use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use infmde::config::RunConfig;
use infmde::evaluation::SeedSet;
use infmde::multiplex::load_edge_list;
use infmde::pipeline::{self, StageSeeds};
use infmde::training::Variant;
use infmde::{glain, Error};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
/// Held-out share used by `--monitor` when the config sets none.
const MONITOR_FRACTION: f64 = 0.1;

#[derive(Parser)]
#[command(
    name = "infmde",
    version,
    about = "Influence maximization on multi-layer networks"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Run configuration (`key = value` lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overrides `master_seed` in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Skip the subgraph embedding; use raw structural features instead
    #[arg(long, global = true)]
    no_glain: bool,
    /// Feed subgraph embeddings straight to the regressor
    #[arg(long, global = true)]
    no_differentiation: bool,
    /// Hold 10% of nodes out of the training loss and log their loss
    #[arg(long, global = true)]
    monitor: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print per-layer statistics of an edge list
    Validate {
        /// Edge list; defaults to the config's `dataset`
        dataset: Option<PathBuf>,
    },
    /// Generate Multi-SIR influence labels
    Labels,
    /// Extract every node's influence subgraph
    Subgraphs,
    /// Write subgraph embeddings at the initial parameters
    Embed,
    /// Train the model and write scores
    Train,
    /// Train and select seeds
    Select,
    /// Compare the model's seeds with the baselines
    Evaluate,
    /// Whole pipeline with every artifact
    RunAll,
    /// Repeat selection for several sampling steps
    StepSweep {
        /// Comma-separated step values
        #[arg(long, value_delimiter = ',', default_value = "0,1,3,5,7")]
        steps: Vec<usize>,
    },
    /// Write the configured synthetic network as an edge list
    Synth,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            let code = if e.is_numeric_error() {
                EXIT_NUMERIC
            } else if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_USAGE
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let variant = match (g.no_glain, g.no_differentiation) {
        (false, false) => Variant::Full,
        (true, false) => Variant::NoGlain,
        (false, true) => Variant::NoDifferentiation,
        (true, true) => {
            return Err(Failure::Usage(
                "--no-glain and --no-differentiation cannot be combined".into(),
            ))
        }
    };

    if let Command::Validate { dataset } = &cli.command {
        let path = match (dataset, &g.config) {
            (Some(p), _) => p.clone(),
            (None, Some(c)) => RunConfig::load(c)?
                .dataset
                .ok_or_else(|| Failure::Usage("config has no `dataset`".into()))?,
            (None, None) => {
                return Err(Failure::Usage(
                    "validate needs a dataset path or --config".into(),
                ))
            }
        };
        let loaded = load_edge_list(&path, None)?;
        print!("{}", pipeline::stats_table(&loaded.network));
        return Ok(());
    }

    let cfg = load_config(g)?;
    let out = g
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    match cli.command {
        Command::Validate { .. } => unreachable!(),
        Command::Synth => {
            let spec = cfg
                .synthetic
                .as_ref()
                .ok_or_else(|| Failure::Usage("config has no synthetic network keys".into()))?;
            let net = infmde::synth::generate_synthetic(spec, cfg.synth_seed)?;
            fs::create_dir_all(&out)?;
            let path = out.join("network.edges");
            net.write_edge_list(&path)?;
            println!("{}", path.display());
        }
        Command::Labels => {
            let data = pipeline::load_dataset(&cfg)?;
            let labels = pipeline::labels(&data.network, &cfg)?;
            let label_cfg = pipeline::sir_config(&data.network, &cfg, cfg.label_runs)?;
            write(
                &out,
                "labels.csv",
                &labels.to_csv(&label_cfg, StageSeeds::new(cfg.master_seed).labels),
            )?;
        }
        Command::Subgraphs => {
            let data = pipeline::load_dataset(&cfg)?;
            let subs = pipeline::subgraphs(&data.network, &cfg)?;
            write(
                &out,
                "subgraphs.txt",
                &infmde::sampler::subgraphs_to_text(&subs),
            )?;
        }
        Command::Embed => {
            let data = pipeline::load_dataset(&cfg)?;
            let net = &data.network;
            let subs = pipeline::subgraphs(net, &cfg)?;
            let (contexts, roots) = pipeline::embedding_inputs(net, &subs);
            let tc = pipeline::training_config(&cfg, variant);
            let labels = vec![0.0; net.node_count()];
            let data_ref = infmde::training::TrainingData {
                contexts: &contexts,
                root_features: &roots,
                labels: &labels,
                train_mask: None,
            };
            let params = infmde::training::init_params(&tc, &data_ref);
            let emb = match &params.glain {
                Some(p) => glain::embed_all(&contexts, p),
                None => roots.clone(),
            };
            let mut text = String::new();
            for (v, row) in emb.iter_rows().enumerate() {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
                text.push_str(&format!("{v},{}\n", cells.join(",")));
            }
            write(&out, "embeddings.csv", &text)?;
        }
        Command::Train | Command::Select => {
            let data = pipeline::load_dataset(&cfg)?;
            let run = pipeline::run_model(&data.network, &cfg, variant)?;
            let label_cfg = pipeline::sir_config(&data.network, &cfg, cfg.label_runs)?;
            let header = vec![format!(
                "labels model=Multi-SIR runs={} master_seed={}",
                label_cfg.runs,
                StageSeeds::new(cfg.master_seed).labels
            )];
            write(&out, "model.txt", &run.model.to_text(&header))?;
            write(
                &out,
                "scores.csv",
                &pipeline::scores_csv(&run.model.scores, &run.labels.scores, data.id_map.as_ref()),
            )?;
            if matches!(cli.command, Command::Select) {
                write(
                    &out,
                    "seeds.json",
                    &pipeline::seeds_json(variant.method_name(), &run.seeds, data.id_map.as_ref()),
                )?;
            }
        }
        Command::Evaluate => {
            let data = pipeline::load_dataset(&cfg)?;
            let net = &data.network;
            let run = pipeline::run_model(net, &cfg, variant)?;
            let mut sets = vec![SeedSet::new(variant.method_name(), run.seeds.clone())];
            sets.extend(pipeline::baseline_seed_sets(net, &cfg, run.k)?);
            let report = pipeline::evaluate(net, &cfg, &sets)?;
            write(&out, "report.csv", &report.to_csv())?;
            print!("{}", report.to_csv());
        }
        Command::RunAll => {
            let timestamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let artifacts = pipeline::run_all(&cfg, variant, &out, timestamp)?;
            print!("{}", artifacts.report.to_csv());
        }
        Command::StepSweep { steps } => {
            let data = pipeline::load_dataset(&cfg)?;
            let rows = pipeline::step_sweep(&data.network, &cfg, &steps, variant)?;
            let csv = pipeline::sweep_csv(&rows);
            write(&out, "step_sweep.csv", &csv)?;
            print!("{csv}");
        }
    }
    Ok(())
}

fn load_config(g: &Global) -> CliResult<RunConfig> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage("this command needs --config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = g.seed {
        cfg.master_seed = seed;
    }
    if g.monitor && cfg.monitor_fraction == 0.0 {
        cfg.monitor_fraction = MONITOR_FRACTION;
    }
    if let Some(dataset) = &cfg.dataset {
        if dataset.is_relative() && !dataset.exists() {
            if let Some(dir) = path.parent() {
                cfg.dataset = Some(dir.join(dataset));
            }
        }
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    log::info!("wrote {}", path.display());
    Ok(())
}
