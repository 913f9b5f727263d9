use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use riesz_cli::{check_lemmas, run_scenario, CliError, ExpectRegistry, Overrides, Scenario};
use riesz_core::rational::{self, Rational};

#[derive(Parser)]
#[command(
    name = "riesz",
    version,
    about = "Riesz space convergence experiments and identity audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON scenario and write CSV and JSON reports.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        horizon: Option<u64>,
        /// Tolerance as an exact rational, e.g. 1/100.
        #[arg(long, value_parser = parse_rational)]
        tol: Option<Rational>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Audit every registered claim and write the audit ledger.
    CheckLemmas {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// JSON object overriding expected statuses by claim id.
        #[arg(long)]
        expect: Option<PathBuf>,
    },
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    let q = rational::parse(s).map_err(|e| e.to_string())?;
    if q <= rational::int(0) {
        return Err("tolerance must be positive".into());
    }
    Ok(q)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            scenario,
            horizon,
            tol,
            seed,
            out,
        } => {
            let s = Scenario::load(&scenario, &Overrides { horizon, tol, seed })?;
            let report = run_scenario(&s, &out)?;
            for c in &report.checks {
                let mark = if c.matches { "ok" } else { "MISMATCH" };
                println!("{:<40} {:<13} expected {:<5} {mark}", c.id, c.status, c.expected);
            }
            for a in &report.audits {
                let mark = if a.matches() { "ok" } else { "MISMATCH" };
                println!(
                    "{:<40} {:<13} expected {:<5} {mark}",
                    a.id,
                    a.result.status.to_string(),
                    a.expected.to_string()
                );
            }
            println!("wrote {} and {}", report.csv_path.display(), report.json_path.display());
            Ok(report.exit_code())
        }
        Command::CheckLemmas {
            trials,
            seed,
            out,
            expect,
        } => {
            let registry = match expect {
                Some(p) => ExpectRegistry::load(&p)?,
                None => ExpectRegistry::default(),
            };
            let report = check_lemmas(trials, seed, &out, &registry)?;
            for a in &report.audits {
                let mark = if a.matches() { "ok" } else { "MISMATCH" };
                println!(
                    "{:<40} {:<18} cases {:<12} witnesses {} {mark}",
                    a.id,
                    a.result.status.to_string(),
                    a.result.cases,
                    a.result.witnesses.len()
                );
            }
            println!("wrote {}", out.join(riesz_cli::runner::LEDGER_PATH).display());
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
