//! Desk-scale laboratory for AI-based radio channel modeling.
//!
//! - [`radiomap`]: synthetic cities and a deterministic path-loss oracle.
//! - [`features`]: physics-informed per-cell feature channels and tabular pixel datasets.
//! - [`quantreg`]: pinball-loss quantile regressors (linear and boosted trees).
//! - [`conformal`]: conformalized quantile regression and coverage auditing.
//! - [`symreg`]: symbolic regression of closed-form path-loss laws.
//! - [`io`]: on-disk formats for grids, radio maps and manifests.

pub mod radiomap;
pub mod rng;
pub mod features;
pub mod io;
pub mod quantreg;
pub mod conformal;
pub mod symreg;
