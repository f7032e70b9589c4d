//! `iepr`: batch front end for circuit synthesis, parameter extraction and verification.

mod commands;
mod tables;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iepr_core::Error;

#[derive(Parser, Debug)]
#[command(name = "iepr", version, about = "Superconducting-chip parameter extraction from inductive-energy participation ratios")]
pub struct Cli {
    /// Print errors as a JSON object on standard error.
    #[arg(long, global = true)]
    pub json_errors: bool,
    /// Seed recorded in the run manifest.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    /// One row per quantity, one column per method.
    Rows,
    /// Bare and normal representations side by side.
    Dual,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Iepr,
    Epr,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct Io {
    #[arg(long)]
    pub input: String,
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// circuit.json -> modes.json
    Synth {
        #[command(flatten)]
        io: Io,
    },
    /// modes.json -> parameters.json
    Extract {
        #[command(flatten)]
        io: Io,
        /// Also write the bare-parameter CSV table here.
        #[arg(long)]
        table: Option<String>,
        /// Junction inductances as name=nH pairs, overriding the mode file.
        #[arg(long, value_delimiter = ',')]
        lj: Vec<String>,
    },
    /// fields.json -> modes.json
    Fields {
        #[command(flatten)]
        io: Io,
        /// Junction inductances as name=nH pairs.
        #[arg(long, value_delimiter = ',')]
        lj: Vec<String>,
    },
    /// parameters.json -> parameters.json with Kerr sections
    Nonlinear {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        /// CSV layout.
        #[arg(long, value_enum, default_value_t = Layout::Rows)]
        layout: Layout,
    },
    /// Eliminate elements and report the effective subsystem.
    Reduce {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_delimiter = ',', required = true)]
        eliminate: Vec<String>,
    },
    /// Effective qubit-qubit coupling versus coupler inductance.
    Sweep {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        coupler: String,
        /// start:stop:steps in nH.
        #[arg(long)]
        grid: String,
    },
    /// Coupling from the minimum normal-mode splitting.
    Nms {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        tuned: String,
        #[arg(long)]
        partner: String,
        /// start:stop search interval for the tuned inductance in nH.
        #[arg(long)]
        interval: String,
    },
    /// Compare the Kerr section against the Fock-space oracle.
    Verify {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 6)]
        levels: usize,
        /// Relative tolerance on alpha' and chi.
        #[arg(long, default_value_t = 0.1)]
        tolerance: f64,
        /// Absolute tolerance on renormalized frequencies (MHz).
        #[arg(long, default_value_t = 0.5)]
        freq_tolerance: f64,
    },
    /// Schema and consistency checks without processing.
    Validate {
        #[arg(required = true)]
        paths: Vec<String>,
    },
}

fn report(err: &Error, json: bool) {
    if json {
        let obj = serde_json::json!({
            "error": { "kind": err.kind(), "message": err.to_string(), "exit_code": err.exit_code() }
        });
        eprintln!("{obj}");
    } else {
        eprintln!("error: {err}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, cli.json_errors);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
