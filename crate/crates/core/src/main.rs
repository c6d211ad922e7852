use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vicar::problem::{Overrides, Problem};
use vicar::report::{analyze_problem, check_problem, CheckStatus};
use vicar::selftest;

const EXIT_INPUT: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_FAIL: u8 = 3;

#[derive(Parser)]
#[command(name = "vicar", version, about = "Classify second-order ODE systems for the inverse problem of the calculus of variations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full classification and write a report.
    Analyze {
        file: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sampling seed; overrides VICAR_SEED and the file.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of sample points for zero testing.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Verify the candidate multiplier or Cartan form in a problem file.
    Check {
        file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run the bundled golden corpus and property checks.
    Selftest {
        /// Only rows whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        /// Golden corpus to use instead of the bundled one.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

fn load(file: &PathBuf, seed: Option<u64>, samples: Option<usize>) -> Result<Problem, ExitCode> {
    Problem::load(file, Overrides { seed, samples }).map_err(|e| {
        eprintln!("error: {}: {e}", file.display());
        ExitCode::from(EXIT_INPUT)
    })
}

fn analyze(file: PathBuf, out: Option<PathBuf>, seed: Option<u64>, samples: Option<usize>) -> Result<ExitCode, ExitCode> {
    let problem = load(&file, seed, samples)?;
    let report = analyze_problem(&problem).map_err(|e| {
        eprintln!("error: {}: {e}", file.display());
        ExitCode::from(EXIT_INPUT)
    })?;
    if let Some(out) = out {
        std::fs::write(&out, report.to_json()).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", out.display());
            ExitCode::from(EXIT_INPUT)
        })?;
    }
    print!("{}", report.summary());
    Ok(if report.is_inconclusive() { ExitCode::from(EXIT_INCONCLUSIVE) } else { ExitCode::SUCCESS })
}

fn check(file: PathBuf, seed: Option<u64>, samples: Option<usize>) -> Result<ExitCode, ExitCode> {
    let problem = load(&file, seed, samples)?;
    let section = check_problem(&problem).map_err(|e| {
        eprintln!("error: {}: {e}", file.display());
        ExitCode::from(EXIT_INPUT)
    })?;
    print!("{}", section.summary());
    Ok(match section.status() {
        CheckStatus::Pass => ExitCode::SUCCESS,
        CheckStatus::Fail => ExitCode::from(EXIT_FAIL),
        CheckStatus::Inconclusive => ExitCode::from(EXIT_INCONCLUSIVE),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.cmd {
        Cmd::Analyze { file, out, seed, samples } => analyze(file, out, seed, samples),
        Cmd::Check { file, seed, samples } => check(file, seed, samples),
        Cmd::Selftest { filter, corpus } => {
            let corpus = match corpus.map(std::fs::read_to_string).transpose() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: cannot read corpus: {e}");
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            let outcome = match selftest::run(corpus.as_deref(), filter.as_deref()) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            print!("{}", outcome.render());
            Ok(if outcome.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_INPUT) })
        }
    };
    result.unwrap_or_else(|code| code)
}
