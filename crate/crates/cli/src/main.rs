use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "cartanflow", version, about = "Radial decompositions, slice densities and level dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Symmetric-space classes and their Cartan data.
    Spaces {
        #[command(subcommand)]
        action: SpacesAction,
    },
    /// Radial decomposition of a `p` element.
    Decompose(DecomposeArgs),
    /// Numeric and closed-form slice densities at a chamber point.
    Density(DensityArgs),
    /// Histogram of radial coordinates of Gaussian samples.
    Sample(SampleArgs),
    /// Reduced level dynamics from a random start.
    Flow(FlowArgs),
    /// Density calibration plus a Kolmogorov-Smirnov check on `q_1`.
    VerifyDensity(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum SpacesAction {
    /// One row per class at its smallest interesting size.
    List {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Numeric,
    Closed,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct SpaceArgs {
    /// aiii, bdi, cii, ai, aii, diii, ci or a2.
    #[arg(long = "class")]
    pub class: String,
    /// Ignored by the single-parameter classes.
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub seed: Option<u64>,
    /// Matrix JSON file holding X.
    #[arg(long)]
    pub input: Option<std::path::PathBuf>,
    /// Matrix JSON file holding the momentum Y (needed with --input --exact-slice).
    #[arg(long, requires = "input")]
    pub momentum: Option<std::path::PathBuf>,
    #[arg(long)]
    pub exact_slice: bool,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Comma separated radial coordinates.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub q: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    pub method: Method,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, default_value_t = 100_000)]
    pub count: u64,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, env = "CARTANFLOW_THREADS", default_value_t = 1)]
    pub threads: usize,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Add the distance to the radial coordinates of X + tY.
    #[arg(long)]
    pub compare: bool,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, default_value_t = 100_000)]
    pub count: u64,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, env = "CARTANFLOW_THREADS", default_value_t = 1)]
    pub threads: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spaces { action: SpacesAction::List { format } } => commands::spaces_list(format),
        Command::Decompose(a) => commands::decompose(&a),
        Command::Density(a) => commands::density(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Flow(a) => commands::flow(&a),
        Command::VerifyDensity(a) => commands::verify_density(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code())
        }
    }
}
