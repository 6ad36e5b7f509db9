use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use grainflow_cli::config::parse_config;
use grainflow_cli::{run_scenario, run_verify_suite, ExitStatus, ScenarioConfig, Task};

#[derive(Parser)]
#[command(
    name = "grainflow",
    version,
    about = "Grain boundary flow simulation and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output directory; with several configs each gets a subdirectory
        /// named after its scenario.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the RNG seed of every scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for independent scenario files.
        #[arg(long, default_value_t = 1)]
        parallel_sweeps: usize,
    },
    /// Run the built-in inequality and property suite.
    VerifySuite {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "grainflow-verify")]
        out: PathBuf,
    },
    /// LS sampling and regression only.
    LsFit {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(
    path: &Path,
    out: Option<&Path>,
    multi: bool,
    seed: Option<u64>,
) -> Result<ScenarioConfig, ExitStatus> {
    let mut cfg = parse_config(path).map_err(|e| {
        log::error!("{}: [{}] {e}", path.display(), e.code());
        ExitStatus::ConfigError
    })?;
    if let Some(out) = out {
        cfg.output_dir = if multi {
            out.join(&cfg.name)
        } else {
            out.to_path_buf()
        };
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cfg: &ScenarioConfig) -> ExitStatus {
    match run_scenario(cfg) {
        Ok(outcome) => {
            for a in &outcome.artifacts {
                log::debug!("wrote {}", a.display());
            }
            outcome.status()
        }
        Err(e) => {
            log::error!("{}: {e}", cfg.name);
            ExitStatus::ConfigError
        }
    }
}

fn run_many(
    configs: &[PathBuf],
    out: Option<&Path>,
    seed: Option<u64>,
    workers: usize,
) -> ExitStatus {
    let multi = configs.len() > 1;
    let next = AtomicUsize::new(0);
    let worst = Mutex::new(ExitStatus::Pass);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(path) = configs.get(i) else { break };
        let status = match load(path, out, multi, seed) {
            Ok(cfg) => execute(&cfg),
            Err(s) => s,
        };
        let mut w = worst.lock().unwrap_or_else(|p| p.into_inner());
        *w = w.worst(status);
    };
    let workers = workers.clamp(1, configs.len().max(1));
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }
    worst.into_inner().unwrap_or_else(|p| p.into_inner())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRAINFLOW_LOG", "info")).init();
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Run {
            configs,
            out,
            seed,
            parallel_sweeps,
        } => run_many(&configs, out.as_deref(), seed, parallel_sweeps),
        Command::VerifySuite { seed, out } => match run_verify_suite(seed, &out) {
            Ok(summary) => summary.status(),
            Err(e) => {
                log::error!("{e}");
                ExitStatus::ConfigError
            }
        },
        Command::LsFit { config, out, seed } => match load(&config, out.as_deref(), false, seed) {
            Ok(mut cfg) => {
                cfg.tasks = [Task::LsFit].into_iter().collect();
                execute(&cfg)
            }
            Err(s) => s,
        },
    };
    ExitCode::from(status.code() as u8)
}
