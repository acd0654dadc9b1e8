//! Run configuration read from a TOML file.
//!
//! Every section is optional. A minimal file:
//!
//! ```toml
//! seed = 7
//!
//! [bench]
//! n_maps = 60
//!
//! [bench.grid]
//! density = 0.3
//!
//! [uncertainty]
//! alpha = 0.1
//!
//! [discover]
//! task = "winner"
//!
//! [discover.gp]
//! time_budget_secs = 300
//! ```

use std::path::{Path, PathBuf};

use radiolab::quantreg::TrainConfig;
use radiolab::radiomap::{GenParams, OracleParams, SplitFractions};
use radiolab::symreg::{GpConfig, DEFAULT_EXEMPLARS};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Directory holding a `manifest.json` written by `gen`; when absent the
    /// benchmark is generated in memory from `[bench]`.
    pub data: Option<PathBuf>,
    pub bench: BenchConfig,
    pub train: TrainConfig,
    pub uncertainty: UncertaintyConfig,
    pub ablation: AblationConfig,
    pub discover: DiscoverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub n_maps: usize,
    pub grid: GenParams,
    pub oracle: OracleParams,
    pub splits: SplitFractions,
    /// TX antenna height, meters.
    pub h_tx: f64,
    /// RX antenna height, meters.
    pub h_rx: f64,
    /// Carrier frequency, GHz.
    pub freq: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_maps: 60,
            grid: GenParams::default(),
            oracle: OracleParams::default(),
            splits: SplitFractions::default(),
            h_tx: 15.0,
            h_rx: 2.0,
            freq: 5.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintyConfig {
    pub alpha: f64,
    /// `baseline`, `physics`, or a comma-separated channel list.
    pub features: String,
    /// Training pixels drawn per training map.
    pub train_pixels: usize,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        Self { alpha: 0.1, features: "physics".into(), train_pixels: 450 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub baseline: String,
    pub physics: String,
    pub train_pixels: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self { baseline: "baseline".into(), physics: "physics".into(), train_pixels: 450 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Fspl,
    Winner,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoverConfig {
    pub task: Task,
    /// Input table for `task = "custom"`: input columns plus `target`.
    pub csv: Option<PathBuf>,
    pub exemplars: usize,
    pub gp: GpConfig,
}

impl Default for DiscoverConfig {
    fn default() -> Self {
        Self { task: Task::Fspl, csv: None, exemplars: DEFAULT_EXEMPLARS, gp: GpConfig::default() }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or(CliError::MissingSeed)
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| CliError::Config("no output directory; pass --out or set `out`".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.bench.n_maps, 60);
        assert_eq!(c.uncertainty.alpha, 0.1);
        assert!(matches!(c.seed(), Err(CliError::MissingSeed)));
    }

    #[test]
    fn nested_sections() {
        let c = RunConfig::from_toml(
            "seed = 3\n[bench]\nn_maps = 9\n[bench.grid]\ndensity = 0.5\n[discover]\ntask = \"winner\"\n[discover.gp]\nrestarts = 2\n",
        )
        .unwrap();
        assert_eq!(c.seed().unwrap(), 3);
        assert_eq!(c.bench.n_maps, 9);
        assert_eq!(c.bench.grid.density, 0.5);
        assert_eq!(c.bench.grid.width, 64);
        assert_eq!(c.discover.task, Task::Winner);
        assert_eq!(c.discover.gp.restarts, 2);
        assert_eq!(c.discover.gp.population, 500);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(RunConfig::from_toml("sed = 3").is_err());
        assert!(RunConfig::from_toml("[bench]\nmaps = 3").is_err());
    }
}
