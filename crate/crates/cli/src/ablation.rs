//! Median models on two feature sets under one training budget.

use std::path::Path;

use radiolab::features::{FeatureSet, Sampling};
use radiolab::io::fmt_sig;
use radiolab::quantreg::{evaluate_rmse, fit_quantile_model, TrainConfig};
use radiolab::radiomap::Split;
use radiolab::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::bench::{write_with, Benchmark};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::uncertainty::writeln_io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub arm: String,
    pub features: Vec<String>,
    pub train_rmse: f64,
    pub test_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub seed: u64,
    pub arms: Vec<ArmResult>,
    /// `1 - physics / baseline` on test RMSE.
    pub relative_improvement: f64,
}

/// Trains both arms on the same pixels with the same config and seed.
pub fn run_ablation(bench: &Benchmark, cfg: &RunConfig, seed: u64) -> Result<AblationTable> {
    let pick_seed = derive_seed(seed, &[21]);
    let train_cfg = TrainConfig { seed: derive_seed(seed, &[20]), ..cfg.train.clone() };
    let arms = [("baseline", &cfg.ablation.baseline), ("physics", &cfg.ablation.physics)]
        .into_iter()
        .map(|(arm, spec)| {
            let features = FeatureSet::parse(spec)?;
            let train = bench.split_pixels(Split::Train, &features, |_| Sampling::Random {
                k: cfg.ablation.train_pixels,
                seed: pick_seed,
            })?;
            let test = bench.split_pixels(Split::Test, &features, |_| Sampling::All)?;
            let model = fit_quantile_model(&train, 0.5, &train_cfg)?;
            Ok(ArmResult {
                arm: arm.to_string(),
                features: features.names(),
                train_rmse: evaluate_rmse(&model, &train)?,
                test_rmse: evaluate_rmse(&model, &test)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let relative_improvement = 1.0 - arms[1].test_rmse / arms[0].test_rmse;
    Ok(AblationTable { seed, arms, relative_improvement })
}

/// `ablation.csv` (one row per arm) and `ablation.json`.
pub fn write_ablation(table: &AblationTable, dir: &Path) -> Result<()> {
    write_with(&dir.join("ablation.csv"), |w| {
        writeln_io(w, "arm,features,train_rmse,test_rmse", "ablation.csv")?;
        for a in &table.arms {
            let line = format!("{},{},{},{}", a.arm, a.features.join(";"), fmt_sig(a.train_rmse, 6), fmt_sig(a.test_rmse, 6));
            writeln_io(w, &line, "ablation.csv")?;
        }
        Ok(())
    })?;
    write_with(&dir.join("ablation.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, table).map_err(|e| CliError::Data(e.to_string()))?;
        writeln_io(w, "", "ablation.json")
    })
}
