//! Synthetic urban environments and deterministic ground-truth path-loss maps.
//!
//! The oracle is free-space path loss over the 3D TX-RX distance plus a fixed
//! excess loss per building run pierced by the direct ray. It is noiseless and
//! exactly reproducible, and keeps the LoS/NLoS structure that the learning
//! experiments depend on.

mod grid;
mod los;
mod oracle;
mod split;

pub use grid::{generate_environment, place_tx, BuildingGrid, GenParams, TxConfig, DEFAULT_MAX_HEIGHT};
pub use los::{line_of_sight, sight_profile, supercover, Crossing, SightProfile};
pub use oracle::{
    compute_radio_map, distance_3d, fspl, fspl_constant, oracle_path_loss, OracleParams, RadioMap,
    SPEED_OF_LIGHT,
};
pub(crate) use oracle::fspl_unchecked;
pub use split::{split_dataset, DatasetSplit, Split, SplitFractions};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioMapError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid transmitter: {0}")]
    InvalidTx(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("building density {density} leaves no room to place a transmitter (must be < 0.95)")]
    TxPlacementImpossible { density: f64 },

    #[error("cell ({x}, {y}) is not a valid open-ground target")]
    InvalidTarget { x: usize, y: usize },

    #[error("free-space path loss requires d > 0 and f > 0 (got d={d}, f={f})")]
    FsplDomain { d: f64, f: f64 },

    #[error("need at least 3 maps to split, got {0}")]
    TooFewMaps(usize),

    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),
}

pub type Result<T> = std::result::Result<T, RadioMapError>;
