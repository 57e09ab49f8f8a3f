use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use centered_md::adversaries::{
    constrained_lb_sequence, unconstrained_lb_comparators, unconstrained_lb_sequence,
};
use clap::{Parser, Subcommand, ValueEnum};
use cmd_harness::config::ExperimentConfig;
use cmd_harness::verify::{check_trace, TraceCheck, TraceCheckParams};
use cmd_harness::{engine, sweep, to_json, trace, write_outputs, write_text};

#[derive(Parser)]
#[command(
    name = "centered-md",
    version,
    about = "Run and verify centered mirror descent experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LbKind {
    Constrained,
    Unconstrained,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Run every *.json config in a directory.
    Sweep {
        dir: PathBuf,
        /// Write the aggregate report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a CSV trace.
    Verify {
        trace: PathBuf,
        #[arg(long = "check", required = true)]
        checks: Vec<TraceCheck>,
        #[arg(long = "G")]
        g_bound: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        slack: f64,
    },
    /// Emit a lower-bound gradient sequence and its comparators as CSV.
    Lowerbound {
        #[arg(long, value_enum)]
        kind: LbKind,
        #[arg(long = "T")]
        horizon: usize,
        #[arg(long = "C", default_value_t = centered_md::adversaries::DEFAULT_C)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Ok(true) when every requested check passed.
fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let out = engine::run_experiment(&config)?;
            write_outputs(&config, &out)?;
            if config.outputs.report.is_none() {
                print!("{}", to_json(&out.report)?);
            }
            Ok(out.report.passed)
        }
        Command::Sweep { dir, out } => {
            let paths = sweep::list_configs(&dir)?;
            if paths.is_empty() {
                bail!("no *.json configs in {}", dir.display());
            }
            let report = sweep::run_sweep(&paths);
            emit(out.as_deref(), &to_json(&report)?)?;
            Ok(report.passed)
        }
        Command::Verify {
            trace: path,
            checks,
            g_bound,
            eps,
            slack,
        } => {
            let file = std::fs::File::open(&path)
                .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
            let rows = trace::read_trace(std::io::BufReader::new(file))?;
            let report = check_trace(
                &rows,
                &checks,
                TraceCheckParams {
                    g_bound,
                    eps,
                    slack,
                },
            )?;
            print!("{}", to_json(&report)?);
            Ok(report.passed)
        }
        Command::Lowerbound {
            kind,
            horizon,
            c,
            eps,
            out,
        } => {
            let (gs, us) = match kind {
                LbKind::Constrained => constrained_lb_sequence(horizon)?,
                LbKind::Unconstrained => {
                    let (gs, _) = unconstrained_lb_sequence(horizon, c)?;
                    let us = unconstrained_lb_comparators(horizon, c, eps, &gs)?;
                    (gs, us)
                }
            };
            let mut buf = Vec::new();
            trace::write_sequence(&mut buf, &gs, &us)?;
            emit(out.as_deref(), std::str::from_utf8(&buf)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
