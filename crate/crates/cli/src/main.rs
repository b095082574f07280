//! `fctl`: evaluate fixed-cycle traffic-light queues, allocate green times and
//! regenerate the published tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fctl_core::delay::WebsterForm;
use fctl_core::reproduce::{Table, TABLE_COUNT};
use fctl_core::{AllocationMethod, FctlError, RoundingPolicy};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] FctlError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(FctlError::Invalid(_) | FctlError::Domain(_)) => 2,
            CliError::Core(FctlError::Infeasible(_)) => 3,
            CliError::Core(FctlError::Numeric(_) | FctlError::Resource(_)) => 4,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fctl",
    version,
    about = "Fixed-cycle traffic-light queue analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write the table here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact and approximate performance of each lane at given greens.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Only this lane (0-based).
        #[arg(long)]
        lane: Option<usize>,
        /// Comma-separated subset of metrics.
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        /// Rule used when the config has no greens.
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Allocate green times and report the resulting queues and delays.
    Allocate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long, value_enum)]
        rounding: Option<Rounding>,
    },
    /// Regenerate one of the published tables.
    Reproduce {
        /// Table number, 1 to 9.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=TABLE_COUNT as i64))]
        table: u8,
        #[arg(long, value_enum, default_value_t = Form::Classical)]
        webster_form: Form,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    FirstOrder,
    Refined,
    WeightedClosed,
    WeightedNumerical,
    BruteForce,
    Webster,
}

impl From<Method> for AllocationMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::FirstOrder => AllocationMethod::FirstOrder,
            Method::Refined => AllocationMethod::Refined,
            Method::WeightedClosed => AllocationMethod::WeightedClosed,
            Method::WeightedNumerical => AllocationMethod::WeightedNumerical,
            Method::BruteForce => AllocationMethod::BruteForce,
            Method::Webster => AllocationMethod::Webster,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Rounding {
    Floor,
    Nearest,
    Randomized,
}

impl From<Rounding> for RoundingPolicy {
    fn from(r: Rounding) -> Self {
        match r {
            Rounding::Floor => RoundingPolicy::Floor,
            Rounding::Nearest => RoundingPolicy::Nearest,
            Rounding::Randomized => RoundingPolicy::Randomized,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Classical,
    Printed,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let table: Table = match cli.command {
        Command::Eval {
            config,
            lane,
            metrics,
            method,
        } => {
            let config = RunConfig::load(&config)?;
            let method = method
                .map(Into::into)
                .or(config.method)
                .unwrap_or(AllocationMethod::FirstOrder);
            commands::eval(&config, lane, &metrics, method)?
        }
        Command::Allocate {
            config,
            method,
            rounding,
        } => {
            let config = RunConfig::load(&config)?;
            let method = method
                .map(Into::into)
                .or(config.method)
                .unwrap_or(AllocationMethod::FirstOrder);
            let rounding = rounding
                .map(Into::into)
                .or(config.rounding)
                .unwrap_or(RoundingPolicy::Randomized);
            commands::allocate_cmd(&config, method, rounding)?
        }
        Command::Reproduce {
            table,
            webster_form,
        } => {
            let form = match webster_form {
                Form::Classical => WebsterForm::Classical,
                Form::Printed => WebsterForm::Printed,
            };
            commands::reproduce(table, form)?
        }
    };
    let text = match cli.format {
        Format::Csv => table.to_csv(),
        Format::Md => table.to_markdown(),
    };
    match cli.out {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fctl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
