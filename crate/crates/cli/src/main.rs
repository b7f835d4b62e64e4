use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gksl_core::config::ProblemConfig;
use gksl_core::pipeline;
use gksl_core::{Error, Result};

/// Compile, simulate and verify single-qubit GKSL evolutions.
#[derive(Debug, Parser)]
#[command(name = "gksl-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the constituent-term decomposition of the GKS matrix.
    Decompose {
        config: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Emit the gate-level circuit for the whole evolution.
    Compile {
        config: PathBuf,
        #[arg(long)]
        qasm: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Simulate the circuit and compare with the master-equation reference.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run the invariant suite; exits 1 if any check fails.
    Verify {
        config: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes the primary artifact to `file` or stdout, and the report to
/// `report`, or to whichever of stdout/stderr the artifact did not use.
fn emit(primary: &str, file: Option<&Path>, report: &str, report_file: Option<&Path>) -> Result<()> {
    match file {
        Some(p) => write_out(p, primary)?,
        None => print!("{primary}"),
    }
    match (report_file, file) {
        (Some(p), _) => write_out(p, report)?,
        (None, Some(_)) => print!("{report}"),
        (None, None) => eprint!("{report}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Decompose { config, report } => {
            let cfg = ProblemConfig::from_path(&config)?;
            let json = pipeline::cmd_decompose(&cfg)?;
            match report {
                Some(p) => write_out(&p, &json)?,
                None => print!("{json}"),
            }
        }
        Command::Compile { config, qasm, report } => {
            let cfg = ProblemConfig::from_path(&config)?;
            let out = pipeline::cmd_compile(&cfg)?;
            emit(&out.qasm, qasm.as_deref(), &out.report_json(), report.as_deref())?;
        }
        Command::Simulate { config, trajectory, report, samples } => {
            let cfg = ProblemConfig::from_path(&config)?;
            let out = pipeline::cmd_simulate(&cfg, samples)?;
            emit(&out.csv, trajectory.as_deref(), &out.summary_json(), report.as_deref())?;
        }
        Command::Verify { config, report } => {
            let cfg = ProblemConfig::from_path(&config)?;
            let rep = pipeline::cmd_verify(&cfg)?;
            let json = rep.to_json();
            match report {
                Some(p) => write_out(&p, &json)?,
                None => print!("{json}"),
            }
            if !rep.passed {
                for c in rep.checks.iter().filter(|c| !c.passed) {
                    eprintln!("check failed: {} (value {:e}, threshold {:e})", c.name, c.value, c.threshold);
                }
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
