//! `surrobid`: market clearing, bid optimization and method comparison from
//! the command line. Data goes to files and standard output; diagnostics go
//! to standard error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use surrobid_core::Error;

use crate::config::{Method, Overrides};

#[derive(Parser)]
#[command(
    name = "surrobid",
    version,
    about = "Storage bidding with Kriging surrogate optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct RunFlags {
    /// Seed for stochastic methods (required for surrogate, ga and random).
    #[arg(long)]
    seed: Option<u64>,
    /// Total evaluation budget.
    #[arg(long)]
    n_max: Option<usize>,
    /// Weight of the entropy exploration term.
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Clear the market for one bid and report cost, profit and prices.
    Market {
        instance: PathBuf,
        /// Offered energy capacity, MWh.
        #[arg(long)]
        e_m: f64,
        /// Offered power rating, MW.
        #[arg(long)]
        p_m: f64,
        #[arg(long, default_value = "surrobid-out")]
        out: PathBuf,
    },
    /// Optimize the storage bid with one method.
    Optimize {
        config: PathBuf,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Compare methods over several seeds against grid enumeration.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Tabulate the entropy increment and ordering totals for 1-D points.
    EntropyDemo {
        /// Comma-separated points in [0, 1].
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.3, 0.7, 0.8])]
        points: Vec<f64>,
        #[arg(long, default_value = "surrobid-out")]
        out: PathBuf,
    },
    /// Check an instance file without solving it.
    Validate { instance: PathBuf },
}

fn overrides(flags: RunFlags, method: Option<Method>) -> Overrides {
    Overrides {
        seed: flags.seed,
        n_max: flags.n_max,
        alpha: flags.alpha,
        out: flags.out,
        method,
    }
}

/// 2 for bad input (usage, configuration, instance data), 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    let bad_input = err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<Error>(),
            Some(Error::Config(_) | Error::Usage(_) | Error::InvalidInstance(_) | Error::Json(_))
        )
    });
    if bad_input {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Market {
            instance,
            e_m,
            p_m,
            out,
        } => commands::market(&instance, e_m, p_m, &out),
        Command::Optimize {
            config,
            method,
            flags,
        } => commands::optimize(&config, &overrides(flags, method)),
        Command::Compare { config, flags } => commands::compare(&config, &overrides(flags, None)),
        Command::EntropyDemo { points, out } => commands::entropy_demo(&points, &out),
        Command::Validate { instance } => commands::validate(&instance),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if let Some(Error::InvalidInstance(v)) =
                err.chain().find_map(|c| c.downcast_ref::<Error>())
            {
                for m in v {
                    eprintln!("  - {m}");
                }
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
