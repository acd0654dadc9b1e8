//! Experiment drivers behind the `radiolab` binary.
//!
//! Each `cmd_*` function stages its artifacts in a scratch directory next to
//! the output directory and moves them into place only on success.

pub mod ablation;
pub mod bench;
pub mod config;
pub mod discover;
mod error;
pub mod output;
pub mod uncertainty;

use std::path::PathBuf;

pub use ablation::{run_ablation, write_ablation, AblationTable, ArmResult};
pub use bench::{Benchmark, MapSample};
pub use config::{AblationConfig, BenchConfig, DiscoverConfig, RunConfig, Task, UncertaintyConfig};
pub use discover::{fspl_check, run_discover, winner_check, write_discover, DiscoverRun, DiscoverSummary, FsplCheck, WinnerCheck};
pub use error::{CliError, Result};
pub use output::Staging;
pub use uncertainty::{heatmap, run_uncertainty, write_uncertainty, MapIntervals, UncertaintyRun};

use bench::write_with;

/// Loads the benchmark named by `data`, or generates it from `[bench]`.
pub fn benchmark(cfg: &RunConfig, seed: u64) -> Result<Benchmark> {
    match &cfg.data {
        Some(dir) => Benchmark::load(dir),
        None => Benchmark::generate(&cfg.bench, seed),
    }
}

pub fn cmd_gen(cfg: &RunConfig) -> Result<PathBuf> {
    let seed = cfg.seed()?;
    let stage = Staging::new(cfg.out_dir()?)?;
    let bench = Benchmark::generate(&cfg.bench, seed)?;
    bench.write(stage.path())?;
    write_with(&stage.path().join("bench.toml"), |w| {
        let text = toml::to_string(&GenRecord { seed, bench: &cfg.bench }).map_err(|e| CliError::Data(e.to_string()))?;
        uncertainty::writeln_io(w, text.trim_end(), "bench.toml")
    })?;
    stage.commit()
}

#[derive(serde::Serialize)]
struct GenRecord<'a> {
    seed: u64,
    bench: &'a BenchConfig,
}

pub fn cmd_uncertainty(cfg: &RunConfig) -> Result<PathBuf> {
    let seed = cfg.seed()?;
    let stage = Staging::new(cfg.out_dir()?)?;
    let run = run_uncertainty(&benchmark(cfg, seed)?, cfg, seed)?;
    write_uncertainty(&run, stage.path())?;
    stage.commit()
}

pub fn cmd_ablation(cfg: &RunConfig) -> Result<PathBuf> {
    let seed = cfg.seed()?;
    let stage = Staging::new(cfg.out_dir()?)?;
    let table = run_ablation(&benchmark(cfg, seed)?, cfg, seed)?;
    write_ablation(&table, stage.path())?;
    stage.commit()
}

pub fn cmd_discover(cfg: &RunConfig) -> Result<PathBuf> {
    let seed = cfg.seed()?;
    let stage = Staging::new(cfg.out_dir()?)?;
    let run = run_discover(cfg, seed)?;
    write_discover(&run, stage.path())?;
    stage.commit()
}
