use std::path::PathBuf;

use radiolab::conformal::ConformalError;
use radiolab::features::FeatureError;
use radiolab::io::FormatError;
use radiolab::quantreg::QuantRegError;
use radiolab::radiomap::RadioMapError;
use radiolab::symreg::SymRegError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no seed given; pass --seed or set `seed` in the config file")]
    MissingSeed,

    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    RadioMap(#[from] RadioMapError),

    #[error(transparent)]
    Feature(#[from] FeatureError),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error(transparent)]
    QuantReg(#[from] QuantRegError),

    #[error(transparent)]
    Conformal(#[from] ConformalError),

    #[error(transparent)]
    SymReg(#[from] SymRegError),
}

impl CliError {
    /// Stable tag printed ahead of the message.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::MissingSeed | CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Data(_) | CliError::Format(_) => "data",
            CliError::RadioMap(_) | CliError::Feature(_) => "params",
            CliError::QuantReg(_) => "train",
            CliError::Conformal(ConformalError::Leakage { .. }) => "leakage",
            CliError::Conformal(_) => "conformal",
            CliError::SymReg(_) => "discover",
        }
    }

    /// `error[kind]: message` on one line.
    pub fn one_line(&self) -> String {
        let msg = self.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error[{}]: {msg}", self.kind())
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

pub type Result<T> = std::result::Result<T, CliError>;
