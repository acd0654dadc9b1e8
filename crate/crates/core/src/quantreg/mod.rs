//! Quantile regressors trained on the pinball loss.
//!
//! Two model classes share one [`QuantileModel`] surface: a linear model fit
//! by subgradient descent on standardized features, and gradient-boosted
//! regression trees whose leaves are set by an exact one-dimensional pinball
//! line search. A lower/upper pair of models yields a [`PredictionInterval`].

mod boost;
mod linear;
mod model;
mod pinball;

pub use model::{
    evaluate_rmse, fit_quantile_model, fit_with_trace, predict_interval, rmse, ModelClass, ModelParams,
    PredictionInterval, Predictor, QuantileModel, TrainConfig, Tree, TreeNode,
};
pub use pinball::{mean_pinball, pinball_loss, pinball_subgradient, tau_quantile};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantRegError {
    #[error("quantile level {0} outside (0, 1)")]
    InvalidTau(f64),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid training config: {0}")]
    InvalidConfig(String),

    #[error("model error: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QuantRegError>;
