//! `gatehash`: synthesize data, train, encode, evaluate and search.
//!
//! Exit codes: 0 success, 2 argument error, 3 data/format error,
//! 4 numeric failure.

mod commands;
mod run_manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "gatehash", version, about = "Context-gated multi-modal hashing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded Gaussian-cluster split (three EMBX files + manifest).
    Synth(SynthArgs),
    /// Train a model on the split's training set.
    Train(TrainArgs),
    /// Encode an EMBX file into a CMHC code file.
    Encode(EncodeArgs),
    /// mAP of query codes ranked against retrieval codes.
    Eval(EvalArgs),
    /// Nearest neighbors of one code.
    Search(SearchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub classes: usize,
    #[arg(long)]
    pub per_class: usize,
    /// Comma-separated per-modality dimensions.
    #[arg(long, value_delimiter = ',', default_values_t = [512usize, 512])]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value = "synth")]
    pub prefix: String,
    /// Where to write the run manifest (default: <out-dir>/<prefix>.run.json).
    #[arg(long)]
    pub run_manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Split manifest written by `synth` (or any JSON naming three EMBX files).
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub bits: usize,
    /// Accept code lengths other than 16, 32, 64 and 128.
    #[arg(long)]
    pub allow_any_bits: bool,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lambda_quant: f64,
    /// Feed raw embeddings instead of per-modality L2-normalized ones.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Epoch log path (default: <out>.log).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub run_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// EMBX file to encode.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub run_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Split manifest supplying query and retrieval labels.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Query code file; repeat once per code length.
    #[arg(long = "query-codes", required = true)]
    pub query_codes: Vec<PathBuf>,
    /// Retrieval code file, paired positionally with --query-codes.
    #[arg(long = "retrieval-codes", required = true)]
    pub retrieval_codes: Vec<PathBuf>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run manifest path (default: <out>.run.json when --out is given).
    #[arg(long)]
    pub run_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Code file to search.
    #[arg(long)]
    pub index: PathBuf,
    /// Id of the query code; looked up in --queries, or in the index itself.
    #[arg(long, conflicts_with = "code", required_unless_present = "code")]
    pub query_id: Option<u64>,
    /// Code file holding --query-id.
    #[arg(long, requires = "query_id")]
    pub queries: Option<PathBuf>,
    /// Raw query code, one character per bit: '+'/'1' or '-'/'0'.
    #[arg(long)]
    pub code: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub topk: usize,
    #[arg(long)]
    pub run_manifest: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] gatehash::Error),
    #[error(transparent)]
    Format(#[from] gatehash::FormatError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_argument() => 2,
            CliError::Core(e) if e.is_numeric() => 4,
            _ => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Train(a) => commands::train(&a),
        Command::Encode(a) => commands::encode(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Search(a) => commands::search(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
