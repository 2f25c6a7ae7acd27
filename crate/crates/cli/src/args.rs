use std::path::PathBuf;

use bvqc::benchmarks::Benchmark;
use bvqc::train::TrainConfig;
use bvqc::watermark::AcceptSign;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bvqc", version, about = "Backdoor watermarks for variational quantum circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a benchmark circuit, optionally with a watermark bundle.
    Train(TrainArgs),
    /// Search for a watermark candidate and embed it.
    Group(GroupArgs),
    /// Check a parameter file against a watermark bundle.
    Verify(VerifyArgs),
    /// Re-compile the circuit onto its device and re-verify every variant.
    Attack(AttackArgs),
    /// Estimate the chance-satisfaction probability and the authorship curve.
    Ppa(PpaArgs),
    /// Collect group summaries of a run directory into a table.
    Report(ReportArgs),
}

fn parse_benchmark(s: &str) -> Result<Benchmark, String> {
    s.parse().map_err(|e: bvqc::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct TrainOpts {
    #[arg(long, value_parser = parse_benchmark)]
    pub benchmark: Benchmark,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub lr: Option<f64>,
    /// Base-task weight.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Watermark-task weight.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
}

impl TrainOpts {
    pub fn train_config(&self) -> TrainConfig {
        let mut cfg = self.benchmark.train_config();
        cfg.seed = self.seed;
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if let Some(lr) = self.lr {
            cfg.lr = lr;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub opts: TrainOpts,
    /// Train jointly with this watermark bundle.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GroupArgs {
    #[command(flatten)]
    pub opts: TrainOpts,
    /// Verification tolerance of generated bundles.
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    /// Offset of the watermark target from the reference probe value.
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub candidates: Option<usize>,
    /// Largest tolerated rise in base GTD after joint training.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Aggregate-score sign a candidate needs before joint training.
    #[arg(long, value_enum)]
    pub accept_sign: Option<SignArg>,
    /// Noise presets to evaluate under, comma separated (`none` = noiseless).
    #[arg(long, value_delimiter = ',', default_value = "none")]
    pub noise: Vec<String>,
    /// Trajectories per noisy evaluation.
    #[arg(long, default_value_t = 1000)]
    pub shots: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SignArg {
    /// Aggregate ≥ 0: probe steps do not move the base loss away from its optimum.
    BenignPositive,
    /// Aggregate < 0.
    Negative,
}

impl From<SignArg> for AcceptSign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::BenignPositive => AcceptSign::BenignPositive,
            SignArg::Negative => AcceptSign::Negative,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub theta: PathBuf,
    /// Override the bundle's tolerance.
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub theta: PathBuf,
    /// Number of re-compilations; layout seeds are `seed..seed + seeds`.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Device coupling map (`line-N`, `heavy-hex-27`); defaults to the
    /// benchmark's own line.
    #[arg(long)]
    pub coupling: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PpaArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, value_parser = parse_benchmark)]
    pub benchmark: Benchmark,
    /// Random parameter draws used to estimate p.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Number of constraints c; the curve covers b = 0..=c.
    #[arg(long, default_value_t = 10)]
    pub constraints: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directory holding the group summaries; the report is written here.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}
