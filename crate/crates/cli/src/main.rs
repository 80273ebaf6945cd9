//! `workchar` command-line driver.

// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verification(String),
}

impl From<workchar::Error> for CliError {
    fn from(e: workchar::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "workchar", version, about = "Characteristic function of quantum work: interferometric simulation and checks")]
struct Cli {
    /// `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Output format (csv by default, json for `verify`).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Bound on the discarded thermal population.
    #[arg(long, global = true)]
    eps_tail: Option<f64>,
    /// Largest allowed oscillator cutoff.
    #[arg(long, global = true)]
    nmax_cap: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample χ(u) for a sudden oscillator quench.
    SweepChi(SweepChiArgs),
    /// Work distribution of the quench, cross-checked against two-point measurements.
    WorkDist(WorkDistArgs),
    /// Partial Fourier inversion ℐ(ε) in closed form against quadrature.
    Inversion(InversionArgs),
    /// Dispersive qubit–resonator circuit against the direct-coupling circuit.
    Dispersive(DispersiveArgs),
    /// χ(u) for a random system coupled to a finite environment.
    Open(OpenArgs),
    /// Run the self-consistency suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long)]
    pub u_min: Option<f64>,
    #[arg(long)]
    pub u_max: Option<f64>,
    #[arg(long)]
    pub u_points: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepMode {
    Protocol,
    Closed,
    Direct,
}

impl std::fmt::Display for SweepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepMode::Protocol => "protocol",
            SweepMode::Closed => "closed",
            SweepMode::Direct => "direct",
        })
    }
}

impl std::str::FromStr for SweepMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
pub struct SweepChiArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub delta_lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub nbar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum)]
    pub mode: Option<SweepMode>,
    /// Exit with status 3 if any deviation from the closed form exceeds this.
    #[arg(long)]
    pub check_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct WorkDistArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub delta_lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub nbar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    /// Number of peaks listed (default: the truncation dimension).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub check_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct InversionArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub delta_lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub nbar: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub w_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub w_max: Option<f64>,
    #[arg(long)]
    pub w_points: Option<usize>,
    #[arg(long)]
    pub check_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct DispersiveArgs {
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_tau: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub nbar: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub check_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct OpenArgs {
    #[arg(long)]
    pub ds: Option<usize>,
    #[arg(long)]
    pub de: Option<usize>,
    /// Size of the system–environment interaction relative to ‖H_f‖_F.
    #[arg(long)]
    pub hse_scale: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub check_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace every threshold of the suite.
    #[arg(long)]
    pub force_tol: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => config::load_config(p)?,
        None => BTreeMap::new(),
    };
    let mut res = config::Resolver::new(&file);
    let defaults = workchar::Config::default();
    let eps_tail = res.finite("eps-tail", cli.eps_tail, Some(defaults.eps_tail))?;
    if !(eps_tail > 0.0 && eps_tail < 1.0) {
        return Err(CliError::Usage("--eps-tail must lie in (0, 1)".into()));
    }
    let nmax_cap = res.get("nmax-cap", cli.nmax_cap, Some(defaults.nmax_cap))?;
    // eps-tail has its own header line.
    res.resolved.retain(|(k, _)| k != "eps-tail");
    let lib = workchar::Config { eps_tail, nmax_cap };

    let default_format = match cli.command {
        Command::Verify(_) => Format::Json,
        _ => Format::Csv,
    };
    let format = cli.format.unwrap_or(default_format);

    let outcome = match &cli.command {
        Command::SweepChi(a) => commands::sweep_chi(a, &mut res, &lib, format),
        Command::WorkDist(a) => commands::work_dist(a, &mut res, &lib, format),
        Command::Inversion(a) => commands::inversion(a, &mut res, &lib, format),
        Command::Dispersive(a) => commands::dispersive(a, &mut res, &lib, format),
        Command::Open(a) => commands::open(a, &mut res, &lib, format),
        Command::Verify(a) => commands::verify(a, &mut res, &lib, format),
    }?;

    write_output(cli.output.as_deref(), &outcome.text)?;
    match outcome.failure {
        Some(msg) => Err(CliError::Verification(msg)),
        None => Ok(()),
    }
}

fn write_output(path: Option<&std::path::Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Usage(format!("cannot write stdout: {e}")))
        }
    }
}
