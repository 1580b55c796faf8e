//! `complement-forge`: solve, verify and catalog additive complements, build
//! fractal specs, and run the density and measure checks.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use complement_forge::Error;

use crate::output::Format;

/// Exit statuses.
pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "complement-forge", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Node budget for the exact solver.
    #[arg(long, global = true)]
    pub budget_nodes: Option<u64>,
    /// Wall-clock budget (seconds) for the exact solver.
    #[arg(long, global = true)]
    pub budget_secs: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Greedy,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RangeArg {
    Nonneg,
    Signed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SetArg {
    Cantor,
    Uniform,
    Density,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Find a complement of the digits-{0,1} blocks of length k and store it.
    Complement {
        #[arg(long)]
        k: u32,
        #[arg(long, value_enum, default_value_t = MethodArg::Greedy)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = RangeArg::Nonneg)]
        range: RangeArg,
    },
    /// Re-verify a catalog entry or an inline code.
    Verify {
        /// Catalog id, label (B1..B5) or digest prefix.
        #[arg(long, conflicts_with = "code")]
        id: Option<String>,
        /// Comma-separated MSB-first blocks, e.g. 000,002,021,110,112.
        #[arg(long)]
        code: Option<String>,
        #[arg(long, value_enum, default_value_t = RangeArg::Nonneg)]
        range: RangeArg,
    },
    /// γ = log|B| / (k log 3) for the best stored code or an entry.
    Gamma {
        #[arg(long, conflicts_with = "id")]
        k: Option<u32>,
        #[arg(long)]
        id: Option<String>,
    },
    /// Build and store a uniform spec (--k) or a density spec (--alpha, --n stages).
    SpecBuild {
        #[arg(long, conflicts_with = "alpha")]
        k: Option<u32>,
        #[arg(long)]
        alpha: Option<String>,
        /// Number of stages for a density spec.
        #[arg(long, default_value_t = 4)]
        n: u32,
    },
    /// Split x into per-block witnesses a + b under a spec.
    Decompose {
        /// Ternary numeral in [0, 1] (or [0, 2] with --reflect).
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// `uniform-k<K>` or a catalog id.
        #[arg(long)]
        spec: String,
        /// Digits to consume (rounded up to a block boundary).
        #[arg(long)]
        depth: u32,
        /// Treat x as r and certify x' + r ∈ 2 − E.
        #[arg(long)]
        reflect: bool,
    },
    /// The density set prefix A[n] and its rational description.
    Density {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        n: u64,
    },
    /// Box-counting estimates at scales 3^-1 .. 3^-depth.
    Boxdim {
        #[arg(long, value_enum, default_value_t = SetArg::Cantor)]
        set: SetArg,
        #[arg(long)]
        depth: u64,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        alpha: Option<String>,
    },
    /// Net-measure DP against the exhaustive oracle, and Marstrand trials.
    Netcheck {
        /// Number of random trials.
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// Mass-distribution ratios on sampled points of ½C_Ā.
    Massratio {
        #[arg(long)]
        alpha: String,
        /// Number of sampled points.
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Largest level f (levels run from 5).
        #[arg(long, default_value_t = 15)]
        depth: u32,
    },
    /// Catalog table and dimension ledger; --all adds density and measure checks.
    Report {
        #[arg(long)]
        all: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotAComplement { .. } | Error::Tampered { .. } => EXIT_VERIFY,
        Error::PrecisionCap { .. } => EXIT_BUDGET,
        Error::Io(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(done) => {
            if let Err(e) = output::emit(&done.output, cli.format, cli.out.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(exit_code(&e));
            }
            ExitCode::from(done.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
