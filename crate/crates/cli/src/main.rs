//! `mfg-lab`: assumption checks, solving and regularity analysis driven by
//! a JSON config.
//!
//! Exit codes: 0 success, 1 a check/solve/analysis failure, 2 a malformed
//! config or command line.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::PipelineConfig;
use pipeline::{load_pair, Run};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Parser)]
#[command(name = "mfg-lab", version, about = "Stationary MFG assumption checks, solver and regularity analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomised sampling; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Emit SVG plots.
    #[arg(long)]
    plots: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the structural assumptions on the model.
    Check(Common),
    /// Minimise the variational energy and recover the density.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Reuse an existing pair in the output directory if its digest matches.
        #[arg(long)]
        resume: bool,
    },
    /// Run the inequality battery on a stored pair.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Directory holding `u.csv` and `m.csv`; defaults to the output directory.
        #[arg(long)]
        pair: Option<PathBuf>,
    },
    /// check → solve → analyze, stopping at the first failing stage.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resume: bool,
    },
}

fn setup(common: &Common, command: &str) -> Result<Run, CliError> {
    let mut cfg = PipelineConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let plots = common.plots || cfg.output.plots;
    Run::new(cfg, command, out, plots)
}

fn execute(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Check(common) => {
            let mut run = setup(&common, "check")?;
            let ok = run.check()?;
            run.finish()?;
            Ok(ok)
        }
        Command::Solve { common, resume } => {
            let mut run = setup(&common, "solve")?;
            let ok = run.solve(resume)?.is_some();
            run.finish()?;
            Ok(ok)
        }
        Command::Analyze { common, pair } => {
            let mut run = setup(&common, "analyze")?;
            let dir = pair.unwrap_or_else(|| run.out_dir().to_path_buf());
            let pair = load_pair(&dir)?;
            let ok = run.analyze(&pair)?;
            run.finish()?;
            Ok(ok)
        }
        Command::Pipeline { common, resume } => {
            let mut run = setup(&common, "pipeline")?;
            let mut ok = run.check()?;
            if ok {
                match run.solve(resume)? {
                    Some(pair) => ok = run.analyze(&pair)?,
                    None => ok = false,
                }
            }
            run.finish()?;
            Ok(ok)
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("MFG_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("MFG_LAB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match init_threads().and_then(|_| execute(cli.command)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ CliError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
