//! `hosa`: simulate, featurize, train, evaluate and reproduce the
//! bispectral classification experiments.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure. Failures also print one JSON object on stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hosa::error::{EvalError, NnError, SimError, SsvsError};
use hosa::Error;

#[derive(Parser, Debug)]
#[command(name = "hosa", version, about = "Bispectral CNN and spectral SSVS time series classifiers")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a labelled two-process dataset as CSV.
    Simulate(SimulateArgs),
    /// Turn a labelled CSV dataset into a binary feature file.
    Featurize(FeaturizeArgs),
    /// Fit a model on a feature file and save a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a feature file.
    Evaluate(EvaluateArgs),
    /// Grad-CAM heatmap of one image.
    Cam(CamArgs),
    /// Run the simulated pair comparison table.
    #[command(name = "reproduce-table1")]
    ReproduceTable1(Table1Args),
    /// Run the Electric Devices comparison on user-supplied files.
    #[command(name = "reproduce-devices")]
    ReproduceDevices(DevicesArgs),
    /// Run an experiment described by a JSON config file.
    Run(RunArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    F32,
    F64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Bispectrum,
    Periodogram,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Bcnn,
    Ssvs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Process pair such as `I,IV` or `I:IV`.
    #[arg(long)]
    pub pair: String,
    #[arg(long, default_value_t = 200)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 100)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub burn_in: usize,
    /// Innovation sd of the threshold (SETAR) processes.
    #[arg(long, default_value_t = 0.003)]
    pub setar_sd: f64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Zero-pad every series to this length (default: the longest).
    #[arg(long)]
    pub size: Option<usize>,
    /// Keep only these original labels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub subset: Option<Vec<i64>>,
    /// Arithmetic used for the bispectrum; values are stored as f64.
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: PrecisionArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// JSON file with the model hyperparameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: PrecisionArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct CamArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Row of the feature file to explain.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Class to explain (default: the predicted class).
    #[arg(long)]
    pub class: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct Table1Args {
    /// Comma-separated pairs such as `I:II,III:VI`; all 21 when absent.
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file with pair-experiment settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: PrecisionArg,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct DevicesArgs {
    /// Training file; with `--test`, overrides the data directory lookup.
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
    /// Directory holding `ElectricDevices_TRAIN/TEST` (default: $HOSA_DATA_DIR).
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Original labels to keep, e.g. `1,2` for the binary experiment; all
    /// classes when absent.
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<i64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: PrecisionArg,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Failure category behind the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Data,
    Numerical,
}

impl Category {
    fn code(self) -> u8 {
        match self {
            Category::Config => 2,
            Category::Data => 3,
            Category::Numerical => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Data => "data",
            Category::Numerical => "numerical",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { category: Category::Config, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { category: Category::Data, message: message.into() }
    }
}

fn categorize(e: &Error) -> Category {
    match e {
        Error::Config(_) => Category::Config,
        Error::Nn(NnError::InvalidConfig(_) | NnError::ImageTooSmall { .. }) => Category::Config,
        Error::Nn(NnError::NonFinite(_)) => Category::Numerical,
        Error::Ssvs(SsvsError::SingularPosteriorCovariance) => Category::Numerical,
        Error::Ssvs(SsvsError::InvalidArgument(_)) => Category::Config,
        Error::Sim(SimError::NonFiniteTrajectory { .. }) => Category::Numerical,
        Error::Sim(SimError::InvalidArgument(_)) => Category::Config,
        Error::Eval(EvalError::DatasetTooSmall { .. }) => Category::Data,
        _ => Category::Data,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self { category: categorize(&e), message: e.to_string() }
    }
}

macro_rules! into_cli_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}

into_cli_error!(
    hosa::error::SimError,
    hosa::error::SpectraError,
    hosa::error::NnError,
    hosa::error::SsvsError,
    hosa::error::EvalError,
    hosa::error::FormatError,
    hosa::error::SeriesError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e.to_string())
    }
}

fn fail(category: Category, message: &str) -> ExitCode {
    let body = serde_json::json!({ "error": category.name(), "code": category.code(), "message": message });
    eprintln!("{body}");
    ExitCode::from(category.code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(Category::Config, e.to_string().trim()),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Featurize(a) => commands::featurize(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Cam(a) => commands::cam(a),
        Command::ReproduceTable1(a) => commands::reproduce_table1(a),
        Command::ReproduceDevices(a) => commands::reproduce_devices(a),
        Command::Run(a) => commands::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.category, &e.message),
    }
}
