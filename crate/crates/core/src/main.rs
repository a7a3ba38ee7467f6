use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use mcqsim::commands::{cmd_ensemble, cmd_histogram, cmd_linearize, cmd_scatter, cmd_simulate};
use mcqsim::config::RunConfig;
use mcqsim::dynamics::Model;
use mcqsim::{Error, Result};

/// Bell-pair disentanglement in random double-quantum-dot environments.
#[derive(Debug, Parser)]
#[command(name = "mcqsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One scene: coherence, correlation functions, time scales.
    Simulate(Common),
    /// Many seeded scenes per radius ratio, with time-scaled collapse statistics.
    Ensemble(Common),
    /// tau_E against tau_geo over seeded scenes.
    Scatter(Common),
    /// Flip-energy histogram, moments and Gaussian fit.
    Histogram(Common),
    /// ln(-ln f) against ln t, with the early-time slope.
    Linearize(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides scene.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated subset of numerical,exact,gaussian.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<Model>>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.scene.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
        if let Some(m) = &self.models {
            cfg.models = m.clone();
            if let Some(first) = m.first() {
                cfg.linearize.source = (*first).into();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (common, f): (&Common, fn(&RunConfig) -> Result<_>) = match &cli.command {
        Command::Simulate(c) => (c, cmd_simulate),
        Command::Ensemble(c) => (c, cmd_ensemble),
        Command::Scatter(c) => (c, cmd_scatter),
        Command::Histogram(c) => (c, cmd_histogram),
        Command::Linearize(c) => (c, cmd_linearize),
    };
    if common.threads == Some(0) {
        return Err(Error::config("--threads", "must be >= 1"));
    }
    let cfg = common.load()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Other(format!("thread pool: {e}")))?;
    let bundle = pool.install(|| f(&cfg))?;
    println!("{}", bundle.dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
