use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radiolab_cli::{cmd_ablation, cmd_discover, cmd_gen, cmd_uncertainty, Result, RunConfig, Task};

#[derive(Parser)]
#[command(name = "radiolab", version, about = "Synthetic radio-map experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate environments, radio maps and a split manifest.
    Gen(Common),
    /// Train a quantile pair, conformalize it and audit coverage.
    Uncertainty {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Compare baseline and physics feature sets.
    Ablation {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
    },
    /// Search for a closed-form path-loss law.
    Discover {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        task: Option<Task>,
        /// Input table for `--task custom`.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Wall-clock budget in seconds, shared by all restarts.
        #[arg(long)]
        budget: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DataArg {
    /// Benchmark directory written by `gen`; generated in memory if omitted.
    #[arg(long)]
    data: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.out.is_some() {
            cfg.out.clone_from(&self.out);
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<PathBuf> {
    match cli.command {
        Command::Gen(common) => cmd_gen(&common.resolve()?),
        Command::Uncertainty { common, data, alpha } => {
            let mut cfg = common.resolve()?;
            if data.data.is_some() {
                cfg.data = data.data;
            }
            if let Some(a) = alpha {
                cfg.uncertainty.alpha = a;
            }
            cmd_uncertainty(&cfg)
        }
        Command::Ablation { common, data } => {
            let mut cfg = common.resolve()?;
            if data.data.is_some() {
                cfg.data = data.data;
            }
            cmd_ablation(&cfg)
        }
        Command::Discover { common, task, csv, budget } => {
            let mut cfg = common.resolve()?;
            if let Some(t) = task {
                cfg.discover.task = t;
            }
            if csv.is_some() {
                cfg.discover.csv = csv;
            }
            if let Some(b) = budget {
                cfg.discover.gp.time_budget_secs = b;
            }
            cmd_discover(&cfg)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.one_line());
            ExitCode::FAILURE
        }
    }
}
