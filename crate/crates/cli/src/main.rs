mod commands;
mod config;
mod dataset;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "rcl", version, about = "Robustified learning for smoothed online convex optimization")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Global seed (falls back to the config file, then SOCO_RCL_SEED, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 1 gives byte-identical reruns.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic or EV-derived instances.
    Gen(GenArgs),
    /// Train the advice predictor.
    Train(TrainArgs),
    /// Evaluate algorithms and write a benchmark report.
    Eval(EvalArgs),
    /// Re-emit tables and histograms from a saved report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// random-walk, sinusoid-noise or adversarial-spike.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Memory weights `w₁,…,w_p` of `δ = Σ wᵢ·x_{t−i}`.
    #[arg(long, value_delimiter = ',')]
    pub memory: Option<Vec<f64>>,
    /// Tracking weight of the hitting cost `(1/b)‖x − y‖²`.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lower: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub upper: Option<f64>,
    /// Context delay bound q.
    #[arg(long)]
    pub delay: Option<usize>,
    /// Draw each delay uniformly from 0..=q instead of fixing it to q.
    #[arg(long)]
    pub random_delay: bool,
    /// Demand CSV to slice into battery instances instead of synthetic data.
    #[arg(long)]
    pub ev: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Fraction of instances to perturb with Gaussian noise.
    #[arg(long)]
    pub contaminate: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory written by `gen`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Checkpoint path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// oblivious or aware.
    #[arg(long)]
    pub mode: Option<String>,
    /// Robustness budget for aware training.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Expert anchoring aware training (hitmin, robd, irobd).
    #[arg(long)]
    pub expert: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Loss curve CSV (defaults next to the checkpoint).
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    /// all, train, valid or test (default train).
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Predictor checkpoint, needed by `ml` and `rcl-*` with learned advice.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Report directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// all, train, valid or test (default test).
    #[arg(long)]
    pub split: Option<String>,
    /// Histogram bin width for per-instance ratios.
    #[arg(long, default_value_t = 0.05)]
    pub bin_width: f64,
    /// Relative context error for `robd-predicted`.
    #[arg(long, default_value_t = 0.15)]
    pub prediction_error: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// report.json written by `eval`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub bin_width: f64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = config::RunConfig::load(cli.config.as_deref())?;
    let seed = cfg.seed(cli.seed)?;
    if let Some(j) = cli.jobs.or(cfg.jobs) {
        if j == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Gen(a) => commands::gen(&a, &cfg, seed),
        Command::Train(a) => commands::train(&a, &cfg, seed),
        Command::Eval(a) => commands::eval(&a, &cfg, seed),
        Command::Report(a) => commands::report(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
