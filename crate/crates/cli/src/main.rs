//! `graphnas`: run, compare and enumerate graph search-space experiments.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use graphnas::controller::ControllerConfig;
use graphnas::harness::{compare_runs, load_replicas, run_experiment, Dominance, EnvSpec, ExperimentConfig};
use graphnas::search_space::{enumerate_with_limit, SearchGraph, Variant};
use graphnas::training::{Algorithm, PqtConfig, ReinforceConfig};

#[derive(Parser)]
#[command(name = "graphnas", version, about = "Architecture search over directed-graph search spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train controllers over several seeded replicas and write CSV curves.
    Run(RunArgs),
    /// Compare two run directories by trials-to-threshold.
    Compare(CompareArgs),
    /// List every complete walk of a space with its decoded record and reward.
    Enumerate(EnumerateArgs),
    /// Write a built-in search space as a graph description file.
    ExportGraph(ExportArgs),
}

/// Experiment settings; every flag can also come from a `--config` JSON file
/// using the same names with underscores (`batch_size`, `queue_k`, ...).
#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Settings {
    /// stack_layers | select_optimizer
    #[arg(long)]
    env: Option<String>,
    /// linear | graph
    #[arg(long)]
    variant: Option<Variant>,
    /// reinforce | pqt
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    /// Entropy regularization coefficient.
    #[arg(long)]
    entropy: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Priority queue size for pqt.
    #[arg(long)]
    queue_k: Option<usize>,
    /// Weight of the REINFORCE term mixed into pqt (0 = pure queue training).
    #[arg(long)]
    reinforce_weight: Option<f64>,
    /// Target layer count for stack_layers.
    #[arg(long)]
    layers: Option<usize>,
    /// Optimizer count for select_optimizer.
    #[arg(long)]
    branches: Option<usize>,
    #[arg(long)]
    value_min: Option<i64>,
    #[arg(long)]
    value_max: Option<i64>,
    /// Optimal hyperparameter value for select_optimizer.
    #[arg(long)]
    target: Option<i64>,
    /// Step cap for walks in the stack_layers graph space.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Controller sizes: state embedding, action embedding, aggregator, LSTM.
    #[arg(long, num_args = 4, value_names = ["STATE", "ACTION", "AGG", "LSTM"])]
    dims: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Settings {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `self` win over `base`.
    fn over(self, base: Settings) -> Settings {
        macro_rules! pick {
            ($($f:ident),*) => { Settings { $($f: self.$f.or(base.$f)),* } };
        }
        pick!(
            env, variant, algo, trials, replicas, seed, lr, entropy, batch_size, queue_k, reinforce_weight, layers,
            branches, value_min, value_max, target, max_steps, dims, out
        )
    }

    fn env_spec(&self) -> Result<EnvSpec> {
        let name = self.env.as_deref().unwrap_or("stack_layers");
        let mut spec: EnvSpec = name.parse()?;
        match &mut spec {
            EnvSpec::StackLayers { layers, max_steps } => {
                if self.branches.is_some() || self.value_min.is_some() || self.value_max.is_some() {
                    bail!("--branches/--value-min/--value-max apply to select_optimizer only");
                }
                *layers = self.layers.unwrap_or(*layers);
                *max_steps = self.max_steps.or(*max_steps);
            }
            EnvSpec::SelectOptimizer { branches, value_min, value_max, target } => {
                if self.layers.is_some() || self.max_steps.is_some() {
                    bail!("--layers/--max-steps apply to stack_layers only");
                }
                *branches = self.branches.unwrap_or(*branches);
                *value_min = self.value_min.unwrap_or(*value_min);
                *value_max = self.value_max.unwrap_or(*value_max);
                *target = self.target.unwrap_or(*target);
            }
        }
        Ok(spec)
    }

    fn experiment(&self) -> Result<ExperimentConfig> {
        let env = self.env_spec()?;
        let variant = self.variant.unwrap_or(Variant::Graph);
        let mut cfg = ExperimentConfig::for_env(env, variant);
        let (lr, entropy) = cfg.env.default_hyperparameters();
        let (lr, entropy) = (self.lr.unwrap_or(lr), self.entropy.unwrap_or(entropy));
        cfg.algorithm = match self.algo.as_deref().unwrap_or("reinforce") {
            "reinforce" => {
                if self.queue_k.is_some() || self.reinforce_weight.is_some() {
                    bail!("--queue-k/--reinforce-weight apply to pqt only");
                }
                let d = ReinforceConfig::default();
                Algorithm::Reinforce(ReinforceConfig {
                    learning_rate: lr,
                    entropy_coefficient: entropy,
                    batch_size: self.batch_size.unwrap_or(d.batch_size),
                    ..d
                })
            }
            "pqt" => {
                let d = PqtConfig::default();
                Algorithm::Pqt(PqtConfig {
                    learning_rate: lr,
                    entropy_coefficient: entropy,
                    batch_size: self.batch_size.unwrap_or(d.batch_size),
                    queue_capacity: self.queue_k.unwrap_or(d.queue_capacity),
                    reinforce_weight: self.reinforce_weight.unwrap_or(d.reinforce_weight),
                    ..d
                })
            }
            other => bail!("unknown algorithm `{other}` (expected reinforce|pqt)"),
        };
        if let Some(d) = &self.dims {
            cfg.controller = ControllerConfig {
                state_embedding_dim: d[0],
                action_embedding_dim: d[1],
                aggregator_hidden_dim: d[2],
                lstm_hidden_dim: d[3],
            };
        }
        cfg.trials = self.trials.unwrap_or(cfg.trials);
        cfg.replicas = self.replicas.unwrap_or(cfg.replicas);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.output = self.out.clone();
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with the same keys as the flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Args)]
struct CompareArgs {
    /// Run directory of the first variant (usually graph).
    first: PathBuf,
    /// Run directory of the second variant (usually linear).
    second: PathBuf,
    /// Reward counted as solved; defaults by environment (1.0 stack_layers, 0.99 select_optimizer).
    #[arg(long)]
    threshold: Option<f64>,
    /// Also write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
    /// Stop with an error after this many walks.
    #[arg(long, default_value_t = 100_000)]
    limit: usize,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    settings: Settings,
}

fn settings(config: Option<&Path>, flags: Settings) -> Result<Settings> {
    Ok(match config {
        Some(path) => flags.over(Settings::load(path)?),
        None => flags,
    })
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = settings(args.config.as_deref(), args.settings)?.experiment()?;
    let threshold = cfg.env.default_threshold();
    let result = run_experiment(&cfg)?;
    println!("env={} variant={} trials={} replicas={}", cfg.env.name(), cfg.variant, cfg.trials, cfg.replicas);
    for (i, h) in result.histories.iter().enumerate() {
        let hit = h.trials_to_threshold(threshold).map_or("-".to_string(), |t| t.to_string());
        println!(
            "replica {i:>2} seed {:>4}: best {:.6} first>={threshold} at {hit}",
            cfg.replica_seed(i),
            h.best().unwrap_or(0.0)
        );
    }
    let last = result.aggregate.last().expect("trials >= 1");
    println!("final best: mean {:.6} min {:.6} max {:.6}", last.mean_best, last.min_best, last.max_best);
    if let Some(dir) = &cfg.output {
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn saved_threshold(dir: &Path) -> Option<f64> {
    let text = fs::read_to_string(dir.join("config.json")).ok()?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).ok()?;
    Some(cfg.env.default_threshold())
}

fn compare(args: CompareArgs) -> Result<()> {
    let threshold = match args.threshold {
        Some(t) => t,
        None => match (saved_threshold(&args.first), saved_threshold(&args.second)) {
            (Some(a), Some(b)) if a == b => a,
            (Some(_), Some(_)) => bail!("runs use different environments; pass --threshold"),
            _ => 1.0,
        },
    };
    let first = load_replicas(&args.first)?;
    let second = load_replicas(&args.second)?;
    let report = compare_runs(&first, &second, threshold)?;
    let show = |t: &[Option<usize>]| {
        t.iter().map(|x| x.map_or("-".into(), |v| v.to_string())).collect::<Vec<String>>().join(" ")
    };
    println!("threshold {threshold} over {} trials", report.trials);
    println!(
        "first : solved {}/{} median {} [{}]",
        report.first_solved,
        first.len(),
        report.first_median,
        show(&report.first_trials)
    );
    println!(
        "second: solved {}/{} median {} [{}]",
        report.second_solved,
        second.len(),
        report.second_median,
        show(&report.second_trials)
    );
    println!(
        "final mean best: first {:.6} second {:.6} gap {:.6}",
        report.first_final_mean_best, report.second_final_mean_best, report.final_gap
    );
    let verdict = match report.dominant {
        Dominance::First => "first dominates",
        Dominance::Second => "second dominates",
        Dominance::Tie => "no dominant run",
    };
    println!("{verdict}");
    if let Some(path) = &args.out {
        fs::write(path, serde_json::to_string_pretty(&report)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn enumerate(args: EnumerateArgs) -> Result<()> {
    let s = settings(args.config.as_deref(), args.settings)?;
    let env = s.env_spec()?.build(s.variant.unwrap_or(Variant::Graph))?;
    let walks = enumerate_with_limit(env.graph(), env.max_steps(), args.limit)?;
    let g = env.graph();
    let mut out = io::BufWriter::new(io::stdout().lock());
    let written = (|| -> io::Result<()> {
        writeln!(out, "# {} walks of at most {} steps", walks.len(), env.max_steps())?;
        for t in &walks {
            let r = env.reward(t).map_err(io::Error::other)?;
            let labels: Vec<&str> = t.steps.iter().map(|s| g.edge(s.edge).label.as_str()).collect();
            writeln!(out, "{}\t{:?}\t{}", labels.join(" "), r.decoded, r.reward)?;
        }
        out.flush()
    })();
    match written {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn export_graph(args: ExportArgs) -> Result<()> {
    let s = args.settings;
    let env = s.env_spec()?.build(s.variant.unwrap_or(Variant::Graph))?;
    let graph: &SearchGraph = env.graph();
    match &s.out {
        Some(path) => graph.save(path)?,
        None => println!("{}", graph.to_json()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Enumerate(a) => enumerate(a),
        Command::ExportGraph(a) => export_graph(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
