//! Conformalized quantile regression: conformity scores, the finite-sample
//! rank correction, corrected intervals and coverage audits.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::PixelDataset;
use crate::quantreg::{PredictionInterval, Predictor, QuantRegError, QuantileModel};
use crate::rng::stream;

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("miscoverage level {0} outside (0, 1)")]
    InvalidAlpha(f64),

    #[error("no conformity scores")]
    EmptyScores,

    #[error("empty {0} set")]
    EmptyData(&'static str),

    #[error("{what} shares map ids {groups:?} with {with}")]
    Leakage { what: &'static str, with: &'static str, groups: Vec<u32> },

    #[error("{0} labels for {1} rows")]
    LabelMismatch(usize, usize),

    #[error("dataset has no {0:?} column")]
    MissingChannel(String),

    #[error(transparent)]
    Model(#[from] QuantRegError),
}

pub type Result<T> = std::result::Result<T, ConformalError>;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(ConformalError::InvalidAlpha(alpha))
    }
}

/// Positive iff `y` falls outside the interval.
pub fn conformity_score(interval: &PredictionInterval, y: f64) -> f64 {
    (interval.lo() - y).max(y - interval.hi())
}

/// Rank `ceil((n + 1)(1 - alpha))`, with a small slack so that products
/// such as `20 * 0.9` land on the intended integer.
pub fn conformal_rank(n: usize, alpha: f64) -> usize {
    ((n as f64 + 1.0) * (1.0 - alpha) - 1e-9).ceil().max(1.0) as usize
}

/// The `conformal_rank(n, alpha)`-th smallest score, or +inf when that rank
/// exceeds `n`.
pub fn empirical_quantile(scores: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if scores.is_empty() {
        return Err(ConformalError::EmptyScores);
    }
    let k = conformal_rank(scores.len(), alpha);
    if k > scores.len() {
        return Ok(f64::INFINITY);
    }
    let mut s = scores.to_vec();
    let (_, v, _) = s.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    Ok(*v)
}

/// Non-finite values are written as `null` and read back as +inf.
mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalCalibration {
    pub alpha: f64,
    #[serde(with = "inf_as_null")]
    pub correction: f64,
    pub n_cal: usize,
    /// Map ids of the calibration rows.
    pub cal_groups: Vec<u32>,
}

impl ConformalCalibration {
    pub fn from_scores(scores: &[f64], alpha: f64) -> Result<Self> {
        Ok(Self { alpha, correction: empirical_quantile(scores, alpha)?, n_cal: scores.len(), cal_groups: Vec::new() })
    }

    pub fn is_unbounded(&self) -> bool {
        self.correction == f64::INFINITY
    }
}

fn overlap(a: &[u32], b: &[u32]) -> Vec<u32> {
    let a: BTreeSet<u32> = a.iter().copied().collect();
    b.iter().filter(|g| a.contains(g)).copied().collect::<BTreeSet<_>>().into_iter().collect()
}

fn check_disjoint(what: &'static str, groups: &[u32], with: &'static str, other: &[u32]) -> Result<()> {
    let shared = overlap(groups, other);
    if shared.is_empty() {
        Ok(())
    } else {
        Err(ConformalError::Leakage { what, with, groups: shared })
    }
}

fn raw_intervals<P: Predictor + Sync>(lo: &P, hi: &P, data: &PixelDataset) -> Result<Vec<PredictionInterval>> {
    if lo.schema() != data.schema() || hi.schema() != data.schema() {
        return Err(QuantRegError::SchemaMismatch(format!("models use {:?}, data has {:?}", lo.schema(), data.schema())).into());
    }
    if !(lo.tau() < hi.tau()) {
        return Err(QuantRegError::InvalidModel(format!("lower tau {} is not below upper tau {}", lo.tau(), hi.tau())).into());
    }
    Ok((0..data.len())
        .into_par_iter()
        .map(|i| {
            let x = data.row(i);
            PredictionInterval::new(lo.predict(x), hi.predict(x))
        })
        .collect())
}

/// Scores every calibration row and takes the conformal rank quantile.
pub fn calibrate(lo: &QuantileModel, hi: &QuantileModel, cal: &PixelDataset, alpha: f64) -> Result<ConformalCalibration> {
    check_alpha(alpha)?;
    if cal.is_empty() {
        return Err(ConformalError::EmptyData("calibration"));
    }
    let cal_groups = cal.group_ids();
    check_disjoint("calibration set", &cal_groups, "lower model training set", &lo.train_groups)?;
    check_disjoint("calibration set", &cal_groups, "upper model training set", &hi.train_groups)?;
    let intervals = raw_intervals(lo, hi, cal)?;
    let scores: Vec<f64> = intervals.iter().zip(cal.targets()).map(|(iv, &y)| conformity_score(iv, y)).collect();
    let mut calib = ConformalCalibration::from_scores(&scores, alpha)?;
    calib.cal_groups = cal_groups;
    Ok(calib)
}

/// A corrected interval; `unbounded` marks an infinite correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalInterval {
    pub interval: PredictionInterval,
    pub unbounded: bool,
    pub collapsed: bool,
}

impl ConformalInterval {
    pub fn contains(&self, y: f64) -> bool {
        self.unbounded || self.interval.contains(y)
    }

    pub fn width(&self) -> f64 {
        if self.unbounded {
            f64::INFINITY
        } else {
            self.interval.width()
        }
    }
}

pub fn conformal_interval(calib: &ConformalCalibration, interval: &PredictionInterval) -> ConformalInterval {
    if calib.is_unbounded() {
        return ConformalInterval {
            interval: PredictionInterval::new(f64::NEG_INFINITY, f64::INFINITY),
            unbounded: true,
            collapsed: false,
        };
    }
    let (lo, hi) = (interval.lo() - calib.correction, interval.hi() + calib.correction);
    if lo > hi {
        let mid = interval.lo() + (interval.hi() - interval.lo()) / 2.0;
        ConformalInterval { interval: PredictionInterval::new(mid, mid), unbounded: false, collapsed: true }
    } else {
        ConformalInterval { interval: PredictionInterval::new(lo, hi), unbounded: false, collapsed: false }
    }
}

/// Where the LoS/NLoS stratum of each test row comes from.
#[derive(Debug, Clone, Copy)]
pub enum LosLabels<'a> {
    /// A feature column; values above 0.5 count as LoS.
    Channel(&'a str),
    Given(&'a [bool]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub n: usize,
    pub coverage: f64,
    #[serde(with = "inf_as_null")]
    pub mean_width: f64,
}

impl IntervalStats {
    fn from_rows(rows: impl Iterator<Item = (bool, f64)>) -> Self {
        let (mut n, mut hit, mut width) = (0usize, 0usize, 0.0);
        for (covered, w) in rows {
            n += 1;
            hit += covered as usize;
            width += w;
        }
        if n == 0 {
            return Self { n, coverage: 0.0, mean_width: 0.0 };
        }
        Self { n, coverage: hit as f64 / n as f64, mean_width: width / n as f64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strata {
    pub los: IntervalStats,
    pub nlos: IntervalStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub alpha: f64,
    pub n_cal: usize,
    #[serde(with = "inf_as_null")]
    pub correction: f64,
    pub n_test: usize,
    pub vanilla: IntervalStats,
    pub conformal: IntervalStats,
    /// Conformal coverage and width split by LoS condition.
    pub strata: Strata,
    /// Vanilla coverage and width split by LoS condition.
    pub vanilla_strata: Strata,
}

impl CoverageReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn los_labels(test: &PixelDataset, labels: LosLabels) -> Result<Vec<bool>> {
    match labels {
        LosLabels::Given(l) if l.len() == test.len() => Ok(l.to_vec()),
        LosLabels::Given(l) => Err(ConformalError::LabelMismatch(l.len(), test.len())),
        LosLabels::Channel(name) => {
            let j = test.column_index(name).ok_or_else(|| ConformalError::MissingChannel(name.to_string()))?;
            Ok(test.rows().map(|r| r[j] > 0.5).collect())
        }
    }
}

fn stratify(rows: &[(bool, f64)], los: &[bool]) -> Strata {
    let pick = |want: bool| rows.iter().zip(los).filter(move |(_, &l)| l == want).map(|(r, _)| *r);
    Strata { los: IntervalStats::from_rows(pick(true)), nlos: IntervalStats::from_rows(pick(false)) }
}

/// Coverage and width of the raw and corrected intervals on a held-out set.
pub fn audit_coverage(
    calib: &ConformalCalibration,
    lo: &QuantileModel,
    hi: &QuantileModel,
    test: &PixelDataset,
    labels: LosLabels,
) -> Result<CoverageReport> {
    if test.is_empty() {
        return Err(ConformalError::EmptyData("test"));
    }
    let test_groups = test.group_ids();
    check_disjoint("test set", &test_groups, "lower model training set", &lo.train_groups)?;
    check_disjoint("test set", &test_groups, "upper model training set", &hi.train_groups)?;
    check_disjoint("test set", &test_groups, "calibration set", &calib.cal_groups)?;
    let los = los_labels(test, labels)?;
    let raw = raw_intervals(lo, hi, test)?;
    let vanilla: Vec<(bool, f64)> = raw.iter().zip(test.targets()).map(|(iv, &y)| (iv.contains(y), iv.width())).collect();
    let corrected: Vec<(bool, f64)> = raw
        .iter()
        .zip(test.targets())
        .map(|(iv, &y)| {
            let c = conformal_interval(calib, iv);
            (c.contains(y), c.width())
        })
        .collect();
    Ok(CoverageReport {
        alpha: calib.alpha,
        n_cal: calib.n_cal,
        correction: calib.correction,
        n_test: test.len(),
        vanilla: IntervalStats::from_rows(vanilla.iter().copied()),
        conformal: IntervalStats::from_rows(corrected.iter().copied()),
        strata: stratify(&corrected, &los),
        vanilla_strata: stratify(&vanilla, &los),
    })
}

/// Summary of a synthetic exchangeable-score experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCoverage {
    pub alpha: f64,
    pub n_cal: usize,
    pub trials: usize,
    pub mean_coverage: f64,
    /// `1 - alpha`.
    pub lower_bound: f64,
    /// `1 - alpha + 1 / (n_cal + 1)`.
    pub upper_bound: f64,
}

/// Draws calibration and test scores i.i.d. standard normal, calibrates on
/// the former and measures coverage of the latter, averaged over trials.
pub fn monte_carlo_coverage(alpha: f64, n_cal: usize, n_test: usize, trials: usize, seed: u64) -> Result<MonteCarloCoverage> {
    check_alpha(alpha)?;
    if n_cal == 0 || n_test == 0 || trials == 0 {
        return Err(ConformalError::EmptyScores);
    }
    let per_trial: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, &[t as u64]);
            let cal: Vec<f64> = (0..n_cal).map(|_| rng.sample(StandardNormal)).collect();
            let q = empirical_quantile(&cal, alpha).expect("nonempty scores");
            let hit = (0..n_test).filter(|_| rng.sample::<f64, _>(StandardNormal) <= q).count();
            hit as f64 / n_test as f64
        })
        .collect();
    Ok(MonteCarloCoverage {
        alpha,
        n_cal,
        trials,
        mean_coverage: per_trial.iter().sum::<f64>() / trials as f64,
        lower_bound: 1.0 - alpha,
        upper_bound: 1.0 - alpha + 1.0 / (n_cal as f64 + 1.0),
    })
}
