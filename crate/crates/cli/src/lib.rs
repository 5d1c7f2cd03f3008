//! Command-line front end. `run` parses arguments, executes one command and
//! returns the process exit code.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ConfigError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] styloprof::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Core(e) if !e.is_data_error() => EXIT_USAGE,
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "styloprof", version, about = "Author profiling from forum posts")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Config file of `key = value` lines
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one config key (KEY=VALUE), repeatable
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// More log output on stderr (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
}

/// Flags that override model-related config keys.
#[derive(Debug, Args, Default)]
pub struct ModelFlags {
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub features: Option<String>,
    #[arg(long)]
    pub select: Option<String>,
    #[arg(long)]
    pub repr: Option<String>,
    /// Ensemble algorithm (message-based pipeline)
    #[arg(long)]
    pub ensemble: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Post,
    User,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    Post,
    User,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a corpus from snapshot archives
    Ingest {
        /// Archive directory, optionally named: NAME=DIR
        #[arg(long, required = true)]
        archive: Vec<String>,
        #[arg(long, default_value = "bbcode-json")]
        adapter: String,
        #[arg(long)]
        out: PathBuf,
        /// Ingestion counters as JSON
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Assign users to train/aggregation/test partitions
    Split {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        fractions: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        min_posts: Option<usize>,
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Achieved fractions as JSON
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train a post-level or user-level text model
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        split: Option<PathBuf>,
        /// Partitions whose users are trained on
        #[arg(long, default_value = "train")]
        partitions: String,
        #[arg(long, value_enum, default_value = "post")]
        level: LevelArg,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a model file to a corpus
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        partition: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Message-based pipeline: post model, aggregation ensemble, test metrics
    Aggregate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        profile_features: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// User-based pipeline: one merged document per user
    Userbased {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Metrics: cross-domain, cross-validation or prediction files
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        /// Apply this model file to the corpus
        #[arg(long, conflicts_with_all = ["cv", "predictions"])]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "post")]
        unit: UnitArg,
        /// Grouped k-fold cross-validation of the configured post model
        #[arg(long, conflicts_with = "predictions")]
        cv: Option<usize>,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, default_value = "train")]
        partitions: String,
        #[command(flatten)]
        flags: ModelFlags,
        /// Score prediction files against the corpus labels
        #[arg(long)]
        predictions: Vec<PathBuf>,
        /// Compare prediction files with different config hashes
        #[arg(long)]
        force: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Age and gender distribution of an unlabeled corpus
    Profile {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        age_model: Option<PathBuf>,
        #[arg(long)]
        gender_model: Option<PathBuf>,
        /// Forums to report, comma separated, in order
        #[arg(long)]
        forum: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.global.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| commands::dispatch(&cli.global, &cli.command)),
        None => commands::dispatch(&cli.global, &cli.command),
    }
}

/// Parse `args` (program name first) and run. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.global.verbose);
    match panic::catch_unwind(AssertUnwindSafe(|| execute(cli))) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal failure");
            EXIT_INTERNAL
        }
    }
}
