//! `doa-cert`: certify, scan, validate and CPWL-check systems from the command line.
//!
//! Exit codes: 0 certified / passed, 1 not certified / failed, 2 bad input,
//! 3 certificate not applicable.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "doa-cert", version, about = "Domain-of-attraction certificates for nonlinear ODEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a certificate and test it at the origin.
    Certify(CertArgs),
    /// Scan a box and write region.csv, boundary.csv and region.svg.
    Region(RegionArgs),
    /// Simulate certified points of a region CSV.
    Validate(ValidateArgs),
    /// Fit a CPWL approximation and co-simulate its error bounds.
    CpwlCheck(CpwlArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// F = Jacobian at the origin.
    Origin,
    /// F = Jacobian at every point.
    Pointwise,
    /// F read from --F.
    Fixed,
}

#[derive(Args, Clone)]
pub struct SystemArgs {
    /// System definition file.
    #[arg(long)]
    pub system: PathBuf,
    /// Override a declared parameter, e.g. --set mu=-0.5 (repeatable).
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Clone)]
pub struct CertArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long, value_enum, default_value = "origin")]
    pub mode: ModeArg,
    /// CSV file with F, one row per line (mode fixed).
    #[arg(long = "F", value_name = "PATH")]
    pub f: Option<PathBuf>,
    /// "auto" or a CSV file with 2n rows: lambda_bar then lambda_tilde ("inf" allowed).
    #[arg(long, default_value = "auto")]
    pub lambdas: String,
    /// Analysis box "lo1:hi1,lo2:hi2"; defaults to [-1, 1] per axis.
    #[arg(long = "box", value_name = "BOX", allow_hyphen_values = true)]
    pub bounds: Option<String>,
}

#[derive(Args, Clone)]
pub struct RegionArgs {
    #[command(flatten)]
    pub cert: CertArgs,
    /// Cells per axis, "N" or "N1,N2".
    #[arg(long, default_value = "101")]
    pub res: String,
}

#[derive(Args, Clone)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Region CSV written by `region`.
    #[arg(long)]
    pub region: PathBuf,
    /// Maximum number of certified points to simulate.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 100.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Clone)]
pub struct CpwlArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Partition box "lo1:hi1,lo2:hi2".
    #[arg(long = "box", value_name = "BOX", allow_hyphen_values = true)]
    pub bounds: String,
    /// Grid cells per axis, "N" or "N1,N2".
    #[arg(long, default_value = "8")]
    pub div: String,
    /// Number of co-simulated trajectories.
    #[arg(long, default_value_t = 20)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Certify(a) => commands::certify(&a),
        Command::Region(a) => commands::region(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::CpwlCheck(a) => commands::cpwl_check(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if e.code() == 3 {
                println!("verdict=not-applicable");
            }
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
