use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use abspin::scenario::{
    emit, parse_scenario, render_sweep_csv, run_scenario, run_sweep, Destination, OutputFormat, ScenarioError,
};
use abspin::selftest::run_selftest;

const VALIDATION_FAILURE: u8 = 1;
const RUNTIME_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "abspin",
    version,
    about = "Spin-1/2 interferometry and Aharonov-Bohm phase simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a scenario without running it.
    Validate { file: PathBuf },
    /// Run every analysis a scenario requests.
    Run {
        file: PathBuf,
        /// Directory for output files; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Run a scenario once per value of a numeric parameter.
    Sweep {
        file: PathBuf,
        /// Parameter path, e.g. `arm[0].element[0].magnitude`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
        /// Directory for sweep.csv; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Validation(format!("{} error: {e}", e.code()))
    }
}

fn read(file: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(file).map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", file.display())))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { file } => {
            let scenario = parse_scenario(&read(&file)?)?;
            println!("ok: {} ({:?})", file.display(), scenario.experiment);
            Ok(())
        }
        Command::Run { file, out, format } => {
            let scenario = parse_scenario(&read(&file)?)?;
            let results = run_scenario(&scenario);
            let destination = out.map_or(Destination::Stdout, Destination::Directory);
            emit(&results, format, &destination)
                .map_err(|e| Failure::Runtime(format!("cannot write output: {e}")))?;
            if results.has_errors() {
                let lines: Vec<String> = results
                    .errors
                    .iter()
                    .map(|e| format!("analysis `{}` failed: {}", e.analysis, e.message))
                    .collect();
                return Err(Failure::Runtime(lines.join("\n")));
            }
            Ok(())
        }
        Command::Sweep {
            file,
            param,
            values,
            out,
        } => {
            let points = run_sweep(&read(&file)?, &param, &values)?;
            let csv = render_sweep_csv(&param, &points);
            match out {
                None => print!("{csv}"),
                Some(dir) => {
                    fs::create_dir_all(&dir)
                        .and_then(|_| fs::write(dir.join("sweep.csv"), &csv))
                        .map_err(|e| Failure::Runtime(format!("cannot write output: {e}")))?;
                }
            }
            let invalid = points.iter().filter(|p| p.outcome.is_err()).count();
            let failed = points
                .iter()
                .filter(|p| p.outcome.as_ref().is_ok_and(|r| r.has_errors()))
                .count();
            if failed > 0 {
                return Err(Failure::Runtime(format!(
                    "{failed} of {} sweep points failed",
                    points.len()
                )));
            }
            if invalid > 0 {
                return Err(Failure::Validation(format!(
                    "{invalid} of {} sweep values give an invalid scenario",
                    points.len()
                )));
            }
            Ok(())
        }
        Command::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} selftest checks failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors count as invalid input, not runtime failures.
            return if e.use_stderr() {
                ExitCode::from(VALIDATION_FAILURE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(VALIDATION_FAILURE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(RUNTIME_FAILURE)
        }
    }
}
