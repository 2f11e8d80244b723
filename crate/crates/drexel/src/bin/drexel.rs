use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drexel::{load_config, run_experiment, ExperimentKind, HarnessError};

#[derive(Parser)]
#[command(name = "drexel", version, about = "Gradient-based discrete samplers with replica exchange")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides `[output] dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for repeats; 0 picks automatically.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run any experiment kind.
    Run { config: PathBuf },
    /// Run an `oracle-check` config.
    OracleCheck { config: PathBuf },
    /// Run an `rbm-train` config.
    RbmTrain { config: PathBuf },
}

fn execute(cli: Cli) -> Result<bool, HarnessError> {
    let (path, expect) = match cli.command {
        Command::Run { config } => (config, None),
        Command::OracleCheck { config } => (config, Some(ExperimentKind::OracleCheck)),
        Command::RbmTrain { config } => (config, Some(ExperimentKind::RbmTrain)),
    };
    let mut cfg = load_config(&path)?;
    if let Some(k) = expect {
        if cfg.run.kind != k {
            return Err(drexel::ConfigError {
                line: None,
                message: format!("expected kind = {}, found {}", k.name(), cfg.run.kind.name()),
            }
            .into());
        }
    }
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(t) = cli.threads {
        cfg.run.threads = t;
    }
    let report = run_experiment(&cfg)?;
    for row in &report.summary {
        println!("{:<24} {:>14.6e} ± {:.3e} (n = {})", row.metric, row.mean, row.std, row.n);
    }
    if let Some(text) = &report.oracle {
        print!("{text}");
    }
    println!("wrote {} files to {}", report.files.len(), cfg.output.dir.display());
    Ok(report.checks_passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
