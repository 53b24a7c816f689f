mod commands;
mod manifest;
mod stores;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ffiredt::synth::TextureMode;
use ffiredt::{DescriptorConfig, DescriptorId, EvaluationFunctionId};

/// Image descriptors, kNN retrieval and instance-based fire classification.
#[derive(Debug, Parser)]
#[command(name = "ffiredt", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Descriptor configuration file (key = value lines)
    #[arg(long, global = true, env = "FFIREDT_CONFIG")]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to the number of logical CPUs
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replace existing outputs
    #[arg(long, global = true)]
    pub overwrite: bool,
    /// Log more (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract descriptors for every image of a manifest into a store directory (--out, default "store")
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', value_parser = parse_fem)]
        fems: Option<Vec<DescriptorId>>,
    },
    /// Label images by majority vote of their nearest stored neighbours
    Classify {
        #[arg(long, default_value = "store")]
        store: PathBuf,
        #[arg(long, value_parser = parse_fem)]
        fem: DescriptorId,
        #[arg(long, value_parser = parse_ef)]
        ef: EvaluationFunctionId,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        images: Vec<PathBuf>,
    },
    /// List the stored images nearest to a query image
    Query {
        #[arg(long, default_value = "store")]
        store: PathBuf,
        #[arg(long, value_parser = parse_fem)]
        fem: DescriptorId,
        #[arg(long, value_parser = parse_ef)]
        ef: EvaluationFunctionId,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        image: PathBuf,
    },
    /// Cross-validated grid, curves and projections into a report directory (--out, default "report")
    Evaluate(EvaluateArgs),
    /// Generate a labeled synthetic corpus (--out, default "synth")
    Synth {
        #[arg(long, default_value_t = 200)]
        per_class: usize,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
        modes: Option<Vec<TextureMode>>,
    },
    /// Time extractors or evaluation functions; CSV on stdout
    Bench {
        #[arg(long, value_enum)]
        mode: BenchMode,
        /// Images to time (extract mode)
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Evaluations per function (distance mode)
        #[arg(long, default_value_t = 10_000_000)]
        evals: u64,
        #[arg(long, default_value_t = ffiredt::evalharness::DEFAULT_BENCH_DIM)]
        dim: usize,
    },
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Store directory to evaluate
    #[arg(long, default_value = "store", conflicts_with = "manifest")]
    pub store: PathBuf,
    /// Extract from a manifest in memory instead of reading stores
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_fem)]
    pub fems: Option<Vec<DescriptorId>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_ef)]
    pub efs: Option<Vec<EvaluationFunctionId>>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Train on all folds but one instead of on a single fold
    #[arg(long)]
    pub conventional_split: bool,
    /// Neighbourhood size for ROC scores
    #[arg(long, default_value_t = ffiredt::evalharness::DEFAULT_ROC_K as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub roc_k: u64,
    /// Also write timing tables
    #[arg(long)]
    pub bench: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub bench_evals: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchMode {
    Extract,
    Distance,
}

fn parse_fem(s: &str) -> Result<DescriptorId, String> {
    s.parse().map_err(|e: ffiredt::Error| e.to_string())
}

fn parse_ef(s: &str) -> Result<EvaluationFunctionId, String> {
    s.parse().map_err(|e: ffiredt::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<TextureMode, String> {
    s.parse().map_err(|e: ffiredt::Error| e.to_string())
}

pub struct Context {
    pub global: Global,
    pub config: DescriptorConfig,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size worker pool: {e}");
        }
    }
    let config = match &cli.global.config {
        Some(path) => match DescriptorConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: config {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => DescriptorConfig::default(),
    };
    let ctx = Context {
        global: cli.global,
        config,
    };
    match commands::run(&ctx, cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
