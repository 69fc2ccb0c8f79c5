mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Curvature of Hermitian metrics: tensors, structure checks, identity suites and the curvature flow.
#[derive(Parser, Debug)]
#[command(name = "hermitia", version)]
pub struct Cli {
    /// Report format; `flow` defaults to csv, everything else to json.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Curvature tensors, Ricci contractions and scalars at points.
    Curvature(CurvatureArgs),
    /// Kähler, balanced and SKT verdicts plus curvature positivity.
    Check(CheckArgs),
    /// Identity suites and the Hopf closed-form oracle.
    Verify(VerifyArgs),
    /// The curvature flow on torus grids, or its exact Hopf reduction.
    Flow(FlowArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Flat,
    Hopf,
}

#[derive(Args, Debug, Clone)]
pub struct MetricArgs {
    /// Built-in metric.
    #[arg(long, value_enum)]
    pub metric: Option<Builtin>,
    /// Complex dimension n.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Torus metric file.
    #[arg(long)]
    pub metric_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct PointArgs {
    /// A point as 2n reals `re1,im1,...,ren,imn`; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Vec<String>,
    /// Number of seeded random points (annulus 1 ≤ |z| ≤ 2 for Hopf, unit cube otherwise).
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConnectionArg {
    LeviCivita,
    Induced,
    Chern,
    Bismut,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum What {
    Tensor,
    Ricci1,
    Ricci2,
    HermitianRicci,
    ComplexifiedRicci,
    RicciVariants,
    Scalars,
    All,
}

#[derive(Args, Debug)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub points: PointArgs,
    #[arg(long, value_enum, default_value = "chern")]
    pub connection: ConnectionArg,
    #[arg(long, value_enum, default_value = "all")]
    pub what: What,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub points: PointArgs,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Random vector pairs per point for the Griffiths sign.
    #[arg(long, default_value_t = 64)]
    pub trials: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Appendix,
    HopfOracle,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub points: PointArgs,
    /// Random forms per identity.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Oracle sample points.
    #[arg(long = "points", default_value_t = 50)]
    pub oracle_points: usize,
    /// Defaults to 1e-9 for the appendix suite and 1e-10 for the oracle.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Integrate the exact reduction on multiples of the Hopf metric.
    #[arg(long)]
    pub hopf_ode: bool,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    /// Horizon.
    #[arg(long = "T", default_value_t = 0.1)]
    pub horizon: f64,
    /// Initial scale for the Hopf reduction.
    #[arg(long, default_value_t = 1.0)]
    pub c0: f64,
    /// Rows in the Hopf series.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Points per real axis.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    /// Fixed time step; defaults to 0.1·Δx²·(min eigenvalue).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Steps between diagnostic rows.
    #[arg(long, default_value_t = 1)]
    pub cadence: usize,
    /// Write the final grid as CSV.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Write a Fourier fit of the final grid in the torus metric format.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Print each diagnostic row to stderr as it is taken.
    #[arg(long)]
    pub progress: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("HERMITIA_THREADS") {
        match v.parse::<usize>() {
            Ok(k) if k > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => {
                eprintln!("error: HERMITIA_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    let (report, default_format) = match commands::dispatch(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code());
        }
    };
    let text = match cli.format.unwrap_or(default_format) {
        Format::Json => report.json(),
        Format::Csv => report.csv(),
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
        }
        None => print!("{text}"),
    }
    match report.passed {
        Some(false) => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    }
}
