use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{RadioMapError, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Cal,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Cal => "cal",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub cal: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.6, cal: 0.2, test: 0.2 }
    }
}

/// A by-map partition: each entry is a map index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub cal: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplit {
    /// Split label of every map index.
    pub fn assignments(&self) -> Vec<Split> {
        let n = self.train.len() + self.cal.len() + self.test.len();
        let mut out = vec![Split::Train; n];
        for &i in &self.cal {
            out[i] = Split::Cal;
        }
        for &i in &self.test {
            out[i] = Split::Test;
        }
        out
    }

    pub fn from_assignments(labels: &[Split]) -> Self {
        let pick = |s: Split| labels.iter().enumerate().filter(|(_, l)| **l == s).map(|(i, _)| i).collect();
        Self { train: pick(Split::Train), cal: pick(Split::Cal), test: pick(Split::Test) }
    }
}

/// Partitions `n_maps` environments into train/calibration/test subsets.
///
/// Splits are by map, so no environment contributes pixels to two subsets.
/// Sizes round each of cal and test to the nearest integer (at least one
/// each), train takes the rest.
pub fn split_dataset(n_maps: usize, fractions: SplitFractions, seed: u64) -> Result<DatasetSplit> {
    if n_maps < 3 {
        return Err(RadioMapError::TooFewMaps(n_maps));
    }
    let SplitFractions { train, cal, test } = fractions;
    if !(train > 0.0 && cal > 0.0 && test > 0.0) || ((train + cal + test) - 1.0).abs() > 1e-9 {
        return Err(RadioMapError::InvalidFractions(format!(
            "fractions ({train}, {cal}, {test}) must be positive and sum to 1"
        )));
    }
    let n = n_maps as f64;
    let n_cal = ((n * cal).round() as usize).max(1);
    let n_test = ((n * test).round() as usize).max(1);
    if n_cal + n_test >= n_maps {
        return Err(RadioMapError::InvalidFractions(format!(
            "fractions leave no training maps out of {n_maps}"
        )));
    }

    let mut order: Vec<usize> = (0..n_maps).collect();
    order.shuffle(&mut rng::stream(seed, &[0x73706c6974]));
    let mut cal_idx = order[..n_cal].to_vec();
    let mut test_idx = order[n_cal..n_cal + n_test].to_vec();
    let mut train_idx = order[n_cal + n_test..].to_vec();
    train_idx.sort_unstable();
    cal_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(DatasetSplit { train: train_idx, cal: cal_idx, test: test_idx })
}
