//! The `valigen` command-line driver. [`dispatch`] is the whole entry point;
//! the binary only forwards its arguments and exit code.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Debug, Parser)]
#[command(
    name = "valigen",
    version,
    about = "Classifier-gated synthetic image generation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stratified train/test split of a labeled manifest.
    Split(SplitArgs),
    /// Write augmented copies of every image in a manifest.
    Augment(AugmentArgs),
    /// Generate validated images of one class.
    Gen(GenArgs),
    /// First-attempt evaluation of every class.
    Eval(EvalArgs),
    /// Re-render confusion.csv and charts from a run's report.json.
    Report(ReportArgs),
    /// Compare the reports of several runs.
    Compare(CompareArgs),
    /// Worker tooling.
    #[command(subcommand)]
    Worker(WorkerCommand),
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub root: PathBuf,
    /// Train fraction as a decimal, e.g. 0.8.
    #[arg(long, default_value = "0.8")]
    pub fraction: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// `default` or a catalog JSON file.
    #[arg(long, default_value = "default")]
    pub catalog: String,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub root: PathBuf,
    /// Augmentation ranges as JSON; defaults apply when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub copies: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "default")]
    pub catalog: String,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Class id or name.
    #[arg(long)]
    pub class: String,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Overrides `loop.base_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `loop.retry_budget`.
    #[arg(long)]
    pub retry_budget: Option<u32>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Overrides `eval.base_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `eval.n_per_class`.
    #[arg(long)]
    pub n_per_class: Option<usize>,
    /// Draw the heatmap with predicted classes as rows.
    #[arg(long)]
    pub transpose: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub transpose: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long, default_value = "comparison.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum WorkerCommand {
    /// Probe the configured workers for protocol conformance.
    Conformance(ConformanceArgs),
    /// Serve a reference worker.
    Reference(ReferenceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WhichWorker {
    Generator,
    Validator,
    Both,
}

#[derive(Debug, Args)]
pub struct ConformanceArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value_t = WhichWorker::Both)]
    pub role: WhichWorker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReferenceKind {
    /// Procedural texture generator.
    Generator,
    /// Nearest-centroid validator.
    Validator,
    /// Validator sampling verdicts from a confusion policy.
    Stub,
}

#[derive(Debug, Args)]
pub struct ReferenceArgs {
    #[arg(long, value_enum)]
    pub role: ReferenceKind,
    #[arg(long, default_value_t = 1.0)]
    pub fidelity: f64,
    #[arg(long, default_value_t = 0.0)]
    pub error_rate: f64,
    /// Row-stochastic k×k CSV for the stub validator.
    #[arg(long, conflicts_with = "stub_diagonal")]
    pub stub_matrix: Option<PathBuf>,
    /// Stub policy with this diagonal and uniform off-diagonal mass.
    #[arg(long)]
    pub stub_diagonal: Option<f64>,
    /// Class count for `--stub-diagonal`.
    #[arg(long, default_value_t = 9)]
    pub classes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `stdio` or `tcp:<port>`.
    #[arg(long, default_value = "stdio")]
    pub transport: String,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub version_tag: Option<String>,
    #[arg(long)]
    pub checkpoint_step: Option<u64>,
}

/// Parses `argv` (program name first) and runs the command. Returns 0 on
/// success, 1 on a domain error and 2 on a usage error.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
