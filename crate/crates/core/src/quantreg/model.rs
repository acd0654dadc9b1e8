use serde::{Deserialize, Serialize};

use super::pinball::{check_tau, mean_pinball};
use super::{boost, linear, QuantRegError, Result};
use crate::features::PixelDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelClass {
    Linear,
    BoostedTrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub model_class: ModelClass,
    /// Boosting stages, or subgradient iterations for the linear class.
    pub iterations: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Row fraction drawn (without replacement) for each tree.
    pub subsample: f64,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model_class: ModelClass::BoostedTrees,
            iterations: 200,
            learning_rate: 0.1,
            max_depth: 6,
            subsample: 0.8,
            min_leaf: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn linear() -> Self {
        Self { model_class: ModelClass::Linear, iterations: 3000, learning_rate: 0.1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(QuantRegError::InvalidConfig(m.to_string()));
        if self.iterations < 1 {
            return bad("iterations must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be >= 1");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must be in (0, 1]");
        }
        if self.min_leaf < 1 {
            return bad("min_leaf must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Regression tree; node 0 is the root and `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ModelParams {
    /// `y = center + scale * (bias + sum_j weights[j] * (x[j] - mean[j]) / std[j])`.
    Linear { mean: Vec<f64>, std: Vec<f64>, center: f64, scale: f64, weights: Vec<f64>, bias: f64 },
    /// `y = base + sum of tree outputs` (shrinkage folded into leaf values).
    BoostedTrees { base: f64, learning_rate: f64, trees: Vec<Tree> },
}

/// A trained conditional-quantile regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileModel {
    pub tau: f64,
    pub schema: Vec<String>,
    /// Map ids seen during training, used to detect calibration leakage.
    pub train_groups: Vec<u32>,
    pub params: ModelParams,
}

pub trait Predictor {
    fn tau(&self) -> f64;
    fn schema(&self) -> &[String];
    fn predict(&self, x: &[f64]) -> f64;
}

impl Predictor for QuantileModel {
    fn tau(&self) -> f64 {
        self.tau
    }

    fn schema(&self) -> &[String] {
        &self.schema
    }

    fn predict(&self, x: &[f64]) -> f64 {
        QuantileModel::predict(self, x)
    }
}

impl QuantileModel {
    pub fn model_class(&self) -> ModelClass {
        match self.params {
            ModelParams::Linear { .. } => ModelClass::Linear,
            ModelParams::BoostedTrees { .. } => ModelClass::BoostedTrees,
        }
    }

    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        match &self.params {
            ModelParams::Linear { mean, std, center, scale, weights, bias } => {
                let z: f64 = weights
                    .iter()
                    .zip(x)
                    .zip(mean.iter().zip(std))
                    .map(|((w, v), (m, s))| w * (v - m) / s)
                    .sum();
                center + scale * (bias + z)
            }
            ModelParams::BoostedTrees { base, trees, .. } => base + trees.iter().map(|t| t.predict(x)).sum::<f64>(),
        }
    }

    pub fn check_schema(&self, schema: &[String]) -> Result<()> {
        if self.schema != schema {
            return Err(QuantRegError::SchemaMismatch(format!(
                "model trained on {:?}, data has {:?}",
                self.schema, schema
            )));
        }
        Ok(())
    }

    pub fn predict_dataset(&self, data: &PixelDataset) -> Result<Vec<f64>> {
        self.check_schema(data.schema())?;
        Ok(data.rows().map(|r| self.predict(r)).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        check_tau(m.tau)?;
        if m.schema.is_empty() {
            return Err(QuantRegError::InvalidModel("empty schema".into()));
        }
        Ok(m)
    }
}

pub fn fit_quantile_model(train: &PixelDataset, tau: f64, config: &TrainConfig) -> Result<QuantileModel> {
    Ok(fit_with_trace(train, tau, config)?.0)
}

/// Fits a model and also returns the mean training pinball loss: for boosted
/// trees after the base prediction and each stage, for the linear class at
/// each iteration.
pub fn fit_with_trace(train: &PixelDataset, tau: f64, config: &TrainConfig) -> Result<(QuantileModel, Vec<f64>)> {
    check_tau(tau)?;
    config.validate()?;
    if train.is_empty() {
        return Err(QuantRegError::EmptyDataset);
    }
    let (params, trace) = match config.model_class {
        ModelClass::Linear => linear::fit(train, tau, config),
        ModelClass::BoostedTrees => boost::fit(train, tau, config),
    };
    let model = QuantileModel { tau, schema: train.schema().to_vec(), train_groups: train.group_ids(), params };
    Ok((model, trace))
}

/// Ordered pair of bounds; construction sorts the endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    lo: f64,
    hi: f64,
}

impl PredictionInterval {
    pub fn new(a: f64, b: f64) -> Self {
        if b < a {
            Self { lo: b, hi: a }
        } else {
            Self { lo: a, hi: b }
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lo <= y && y <= self.hi
    }
}

/// Interval from a lower/upper quantile pair; crossed outputs are reordered.
pub fn predict_interval<P: Predictor>(lo: &P, hi: &P, x: &[f64]) -> Result<PredictionInterval> {
    if lo.schema() != hi.schema() {
        return Err(QuantRegError::SchemaMismatch("lower and upper models disagree on schema".into()));
    }
    if !(lo.tau() < hi.tau()) {
        return Err(QuantRegError::InvalidModel(format!("lower tau {} is not below upper tau {}", lo.tau(), hi.tau())));
    }
    if x.len() != lo.schema().len() {
        return Err(QuantRegError::SchemaMismatch(format!(
            "feature vector of length {} for a schema of {}",
            x.len(),
            lo.schema().len()
        )));
    }
    Ok(PredictionInterval::new(lo.predict(x), hi.predict(x)))
}

/// Root mean squared error of any predictor over a dataset.
pub fn rmse<P: Predictor>(p: &P, data: &PixelDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(QuantRegError::EmptyDataset);
    }
    if p.schema() != data.schema() {
        return Err(QuantRegError::SchemaMismatch(format!("{:?} vs {:?}", p.schema(), data.schema())));
    }
    let se: f64 = data.rows().zip(data.targets()).map(|(r, y)| (p.predict(r) - y).powi(2)).sum();
    Ok((se / data.len() as f64).sqrt())
}

/// RMSE of a median model.
pub fn evaluate_rmse<P: Predictor>(model: &P, data: &PixelDataset) -> Result<f64> {
    if model.tau() != 0.5 {
        return Err(QuantRegError::InvalidModel(format!("rmse is defined for median models, got tau={}", model.tau())));
    }
    rmse(model, data)
}

pub(crate) fn train_loss(tau: f64, targets: &[f64], preds: &[f64]) -> f64 {
    mean_pinball(tau, targets, preds)
}
