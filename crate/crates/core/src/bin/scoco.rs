use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scoco::config::{RunConfig, SensitivityOptions};
use scoco::run::{run, Command};

#[derive(Parser)]
#[command(name = "scoco", version, about = "Sovereign contingent convertible bond pricing")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Regime statistics and transition matrices.
    Estimate(Common),
    /// SRMR parameters per regime.
    Calibrate(Common),
    /// Scenario generation and cache.
    Simulate(Common),
    /// Monte Carlo price at the configured coupon.
    Price(Common),
    /// Par rates across trigger thresholds.
    ParRate(Common),
    /// Least-squares Monte Carlo horizon prices.
    Lsm(Common),
    /// Dirichlet perturbation of the stationary distribution.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Concentration; repeat for several.
        #[arg(long)]
        alpha: Vec<f64>,
        /// Draws per concentration.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Every configured pipeline.
    Run(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, alpha, samples) = match cli.command {
        Cmd::Estimate(c) => (Command::Estimate, c, vec![], None),
        Cmd::Calibrate(c) => (Command::Calibrate, c, vec![], None),
        Cmd::Simulate(c) => (Command::Simulate, c, vec![], None),
        Cmd::Price(c) => (Command::Price, c, vec![], None),
        Cmd::ParRate(c) => (Command::ParRate, c, vec![], None),
        Cmd::Lsm(c) => (Command::Lsm, c, vec![], None),
        Cmd::Sensitivity { common, alpha, samples } => (Command::Sensitivity, common, alpha, samples),
        Cmd::Run(c) => (Command::Run, c, vec![], None),
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let mut config = match RunConfig::from_path(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", common.config.display());
            return ExitCode::FAILURE;
        }
    };
    if let Some(s) = common.seed {
        config.seed = s;
    }
    if let Some(o) = common.out {
        config.out = Some(std::env::current_dir().map(|d| d.join(&o)).unwrap_or(o));
    }
    if !alpha.is_empty() || samples.is_some() {
        let s = config.sensitivity.get_or_insert_with(SensitivityOptions::default);
        if !alpha.is_empty() {
            s.alphas = alpha;
        }
        if let Some(n) = samples {
            s.samples = n;
        }
    }
    match run(&config, command) {
        Ok(m) => {
            println!("{}: {} files in {}", m.command, m.outputs.len(), config.out_dir().display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
