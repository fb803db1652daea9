use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adhesim::cli::{commands, config};
use adhesim::Error;

/// Simulator for a two-phenotype cancer-cell model with nonlocal
/// cell-cell adhesion on bounded domains.
#[derive(Parser)]
#[command(name = "adhesim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured simulation and write monitors + snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the verification suite and write a machine-readable report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Linear stability rates around the constant steady states.
    Stability {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement studies: geometry, quadrature, boundary decay.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("ADHESIM_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                // ignore failure if a pool was already installed
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(Error::Instability { step, t, detail }) => {
            eprintln!("error: instability at step {step} (t = {t}): {detail}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let cfg = config::parse_config(&config)?;
            let out_dir = commands::simulate_command(&cfg, out.as_deref(), seed)?;
            println!("run complete; artifacts in {}", out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { config, out, seed } => {
            let cfg = config::parse_config(&config)?;
            let report = commands::verify_command(&cfg, out.as_deref(), seed.unwrap_or(cfg.seed))?;
            if report.all_passed {
                println!("all checks passed");
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("verification failures; see verify_report.json");
                Ok(ExitCode::from(1))
            }
        }
        Command::Stability { config, out } => {
            let cfg = config::parse_config(&config)?;
            commands::stability_command(&cfg, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Convergence { config, out } => {
            let cfg = config::parse_config(&config)?;
            commands::convergence_command(&cfg, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
