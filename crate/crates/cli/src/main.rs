use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use demto_cli::config::{CaseKind, ForwardMode, RunConfig};
use demto_cli::{run_case, CliError};

#[derive(Parser)]
#[command(name = "demto", version, about = "Topology optimization with neural or finite element forward solves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named case (bridge2d, beam2d, bridge3d, unitcell_shear) or a config file.
    Run {
        target: String,
        #[arg(long, value_parser = ["dem", "fem", "both"])]
        forward: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fixed activation slopes, so repeated runs give identical output.
        #[arg(long)]
        deterministic: bool,
    },
}

fn resolve(target: &str) -> Result<RunConfig, CliError> {
    match CaseKind::parse(target) {
        Some(case) if !Path::new(target).is_file() => Ok(RunConfig::for_case(case)),
        _ => RunConfig::from_path(Path::new(target)),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("DEMTO_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| CliError::Config(format!("DEMTO_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let Command::Run {
        target,
        forward,
        seed,
        out,
        deterministic,
    } = cli.command;
    let mut cfg = resolve(&target)?;
    if let Some(f) = forward.as_deref().and_then(ForwardMode::parse) {
        cfg.forward = f;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output = o;
    }
    cfg.deterministic |= deterministic;
    cfg.validate()?;
    let summary = run_case(&cfg, |line| eprintln!("{line}"))?;
    for run in &summary.runs {
        if let Some(last) = run.records.last() {
            println!(
                "{}: objective {:.6e} (relative {:.4}), volume fraction {:.4}, results in {}",
                run.solver,
                last.objective,
                last.relative_objective,
                last.volume_fraction,
                run.directory.display()
            );
        }
    }
    if let Some(last) = summary.dsc.as_ref().and_then(|d| d.last()) {
        println!("final DSC {last:.4}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
