//! Argument parsing and resolution into a [`RunConfig`].

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gwcp_core::dist::DistributionSpec;
use gwcp_core::mc::SurvivalMode;
use gwcp_core::TreeMode;
use serde::Serialize;

use crate::CliError;

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "GWCP_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "gwcp",
    version,
    about = "Critical-value bounds and simulation for branching random walks and contact processes on Galton-Watson trees"
)]
pub struct Cli {
    /// Master seed for every stochastic command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores; GWCP_THREADS overrides).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeArg {
    Gw,
    Agw,
}

impl From<TreeArg> for TreeMode {
    fn from(t: TreeArg) -> Self {
        match t {
            TreeArg::Gw => TreeMode::Gw,
            TreeArg::Agw => TreeMode::Agw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessArg {
    Cp,
    Brw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Global,
    Local,
}

impl From<ModeArg> for SurvivalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Global => SurvivalMode::Global,
            ModeArg::Local => SurvivalMode::Local,
        }
    }
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// All certified bounds and the weak-survival verdict for one tree law.
    Bounds(BoundsArgs),
    /// Checks a weight-function certificate.
    Certify(CertifyArgs),
    /// Grid search for the best certificate.
    SearchCertificate(SearchArgs),
    /// Spectral radius: closed form and return-probability estimate.
    SpectralRadius(SpectralArgs),
    /// Runs batches of BRW or CP trials.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Bisection for an empirical critical value.
    EstimateCritical(EstimateArgs),
    /// Every certified constant for degenerate laws h_min = 4..12, with self-checks.
    PaperTable(TableArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bounds(_) => "bounds",
            Command::Certify(_) => "certify",
            Command::SearchCertificate(_) => "search-certificate",
            Command::SpectralRadius(_) => "spectral-radius",
            Command::Simulate(Simulate::Brw(_)) => "simulate brw",
            Command::Simulate(Simulate::Cp(_)) => "simulate cp",
            Command::EstimateCritical(_) => "estimate-critical",
            Command::PaperTable(_) => "paper-table",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundsArgs {
    /// Tree law, JSON descriptor.
    #[arg(long)]
    pub dist: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub h_min: u32,
    #[arg(long)]
    pub nu: f64,
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub b: f64,
    /// Defaults to b*r.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n_v_max: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long)]
    pub h_min: u32,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_scale: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectralArgs {
    #[arg(long)]
    pub h_min: u32,
    #[arg(long, default_value_t = 1000)]
    pub n_max: usize,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "lowercase", tag = "process")]
pub enum Simulate {
    /// Discrete-time branching random walk.
    Brw(BrwArgs),
    /// Contact process, coupled across all given rates.
    Cp(CpArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BrwArgs {
    #[arg(long)]
    pub dist: PathBuf,
    /// Reproduction law, JSON descriptor.
    #[arg(long, conflicts_with = "mu", required_unless_present = "mu")]
    pub reproduction: Option<PathBuf>,
    /// Mean of a geometric reproduction law; comma-separated for several.
    #[arg(long, value_delimiter = ',')]
    pub mu: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub generations: u32,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub pop_cap: u64,
    #[arg(long, value_enum, default_value_t = TreeArg::Agw)]
    pub tree: TreeArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CpArgs {
    #[arg(long)]
    pub dist: PathBuf,
    /// Infection rates, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = 30.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = gwcp_core::cp::DEFAULT_MAX_INFECTED)]
    pub max_infected: usize,
    #[arg(long, default_value_t = gwcp_core::cp::DEFAULT_DEPTH_CAP)]
    pub depth_cap: u32,
    #[arg(long, value_enum, default_value_t = TreeArg::Agw)]
    pub tree: TreeArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub process: ProcessArg,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long)]
    pub dist: PathBuf,
    /// `A,B`: rates (CP) or geometric means (BRW).
    #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
    pub bracket: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    /// Trials per probe.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 30.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 40)]
    pub generations: u32,
    #[arg(long, default_value_t = gwcp_core::cp::DEFAULT_MAX_INFECTED)]
    pub max_infected: usize,
    #[arg(long, default_value_t = gwcp_core::cp::DEFAULT_DEPTH_CAP)]
    pub depth_cap: u32,
    #[arg(long, default_value_t = 100_000)]
    pub pop_cap: u64,
    #[arg(long, value_enum, default_value_t = TreeArg::Agw)]
    pub tree: TreeArg,
    /// Also write per-trial records at the final interval's endpoints.
    #[arg(long)]
    pub trials_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TableArgs {
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
}

/// Fully resolved run configuration, echoed into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub command: Command,
    /// Tree law loaded from `--dist`, if the command takes one.
    pub dist: Option<DistributionSpec>,
    /// Reproduction law loaded from `--reproduction`.
    pub reproduction: Option<DistributionSpec>,
}

fn load_spec(path: &Path) -> Result<DistributionSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    DistributionSpec::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn resolve_threads(flag: Option<usize>) -> Result<usize, CliError> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
        ),
        Err(_) => None,
    };
    let n = from_env.or(flag).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(CliError::Usage("thread count must be at least 1".into()));
    }
    Ok(n)
}

/// Parses `argv` (including the program name) and loads any referenced
/// distribution files.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    let threads = resolve_threads(cli.threads)?;
    let (dist, reproduction) = match &cli.command {
        Command::Bounds(a) => (Some(load_spec(&a.dist)?), None),
        Command::Simulate(Simulate::Brw(a)) => {
            let repro = a.reproduction.as_deref().map(load_spec).transpose()?;
            (Some(load_spec(&a.dist)?), repro)
        }
        Command::Simulate(Simulate::Cp(a)) => (Some(load_spec(&a.dist)?), None),
        Command::EstimateCritical(a) => {
            if a.bracket.len() != 2 {
                return Err(CliError::Usage(format!(
                    "--bracket takes exactly two values A,B, got {}",
                    a.bracket.len()
                )));
            }
            (Some(load_spec(&a.dist)?), None)
        }
        _ => (None, None),
    };
    Ok(RunConfig {
        seed: cli.seed,
        threads,
        out: cli.out,
        format: cli.format,
        command: cli.command,
        dist,
        reproduction,
    })
}
