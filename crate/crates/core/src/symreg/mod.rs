//! Symbolic regression over a small operator grammar.
//!
//! Expressions combine the inputs with `+ * / ^` and `log10 sin cos square`.
//! Candidates are bred by generational genetic programming, their constants
//! refitted by derivative-free local search, and the best expression found
//! at each size is kept in a [`ParetoFront`].

mod data;
mod enumerate;
mod expr;
mod fit;
mod gp;
mod text;

pub use data::{
    make_fspl_dataset, make_winner_dataset, winner_folded_constant, winner_path_loss, Ranges, SymDataset,
    DEFAULT_EXEMPLARS, WINNER_CONSTANT,
};
pub use enumerate::{brute_force_front, enumerate_skeletons};
pub use expr::{validate_constraints, BinaryOp, DomainFault, Expr, UnaryOp, DIV_EPS};
pub use fit::{fit_constants, rmse, FitOptions, Fitted};
pub use gp::{evolve, evolve_with_log, FrontEntry, GenRecord, GpConfig, ParetoFront, RunResult};
pub use text::{parse_expr, render_expr, CONST_DIGITS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SymRegError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid search config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SymRegError>;

/// Evaluates `expr` on one input row.
pub fn eval_expr(expr: &Expr, row: &[f64]) -> std::result::Result<f64, DomainFault> {
    expr.eval(row)
}

/// Node count of an expression.
pub fn complexity(expr: &Expr) -> usize {
    expr.complexity()
}
