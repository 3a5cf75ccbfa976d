use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;

use config::ConfigFile;
use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "pconet",
    version,
    about = "Train, evaluate and run the PCONet ultrasound classifier"
)]
struct Cli {
    /// Flat `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run on a single worker thread.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a fresh model on a directory dataset.
    Train(TrainArgs),
    /// Score a checkpoint on a labeled directory dataset.
    Eval(EvalArgs),
    /// Classify individual images.
    Predict(PredictArgs),
    /// Print the layer table and parameter counts.
    Summary(SummaryArgs),
    /// Write a small generated dataset of blob and blank-field images.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

impl std::str::FromStr for Toggle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on" | "true" => Ok(Toggle::On),
            "off" | "false" => Ok(Toggle::Off),
            other => Err(format!("expected on or off, got `{other}`")),
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset root holding `infected/` and `not_infected/`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Separate validation root; without it the data is split 80/20.
    #[arg(long)]
    pub val_dir: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub augment: Option<Toggle>,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-epoch CSV log; curve SVGs are written beside it.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Emit one JSON object instead of the text table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SummaryArgs {
    /// Validate and describe an existing checkpoint instead of a fresh model.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub per_class: usize,
    #[arg(long, default_value_t = 64)]
    pub size: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn configure_threads(deterministic: bool) -> Result<(), CliError> {
    let threads = if deterministic {
        Some(1)
    } else {
        match std::env::var("PCONET_THREADS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Some(n),
                _ => {
                    return Err(CliError::Usage(format!(
                        "PCONET_THREADS must be a positive integer, got `{v}`"
                    )))
                }
            },
            Err(_) => None,
        }
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    configure_threads(cli.deterministic || config.flag("deterministic")?)?;
    match cli.command {
        Command::Train(args) => commands::train::run(args, &config),
        Command::Eval(args) => commands::eval::run(args, &config),
        Command::Predict(args) => commands::predict::run(args, &config),
        Command::Summary(args) => commands::summary::run(args, &config),
        Command::Synth(args) => commands::synth::run(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pconet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
