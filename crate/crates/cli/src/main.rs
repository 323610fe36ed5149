use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;
mod plot;

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum Fail {
    /// Bad flags, config file or unwritable output (exit 2).
    Config(String),
    /// Output could not be written (exit 2).
    Io(String),
    /// A numerical routine failed (exit 3).
    Numeric { op: &'static str, msg: String },
}

impl Fail {
    pub fn numeric(op: &'static str) -> impl Fn(blockspt_core::Error) -> Fail {
        move |e| Fail::Numeric { op, msg: e.to_string() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "blockspt", version, about = "Phase transitions and error bounds for l2/l1 block-sparse recovery")]
pub struct Cli {
    /// TOML file with default values for the flags below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV and SVG files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Block length.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Number of nonzero blocks.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Number of blocks.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Measurement counts, LO:HI inclusive.
    #[arg(long, global = true)]
    pub m_range: Option<String>,
    /// Comma-separated measurement ratios.
    #[arg(long, global = true, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Comma-separated sparsity ratios.
    #[arg(long, global = true, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    /// Angle grid, LO:HI:STEP.
    #[arg(long, global = true)]
    pub eps_range: Option<String>,
    /// Worker threads; BLOCKSPT_THREADS takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Cap measures for `crofton`: analytic, simulated or both.
    #[arg(long, global = true)]
    pub source: Option<String>,
    /// Ridge weight of the intrinsic-volume regression.
    #[arg(long, global = true)]
    pub lambda_reg: Option<f64>,
    /// KKT tolerance of the regression's quadratic programs.
    #[arg(long, global = true)]
    pub kkt_tol: Option<f64>,
    /// Skip SVG output.
    #[arg(long, global = true)]
    pub no_plot: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Weak threshold alpha_w over a beta grid.
    PtCurve,
    /// Failure exponent bound over an alpha grid.
    LdpUpper,
    /// Success exponent bound over an alpha grid.
    LdpLower,
    /// Finite-size Chernoff bounds over an M range.
    FiniteBound,
    /// Cap-extension measure: analytic bound, plus simulation when --trials > 0.
    CapMeasure,
    /// Error probability through intrinsic volumes.
    Crofton,
    /// Width-comparison bound over an M range.
    AgBound,
    /// Monte Carlo recovery failure rate over an M range.
    Simulate,
    /// Recompute one of the published tables (1-6).
    ReproduceTable {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=6))]
        number: u8,
    },
    /// Recompute the data behind one of the published figures (1-6).
    ReproduceFigure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=6))]
        number: u8,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(Fail::Config(m)) | Err(Fail::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Fail::Numeric { op, msg }) => {
            eprintln!("numeric failure in {op}: {msg}");
            ExitCode::from(3)
        }
    }
}
