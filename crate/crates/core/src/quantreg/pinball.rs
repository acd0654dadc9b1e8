use super::{QuantRegError, Result};

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(QuantRegError::InvalidTau(tau))
    }
}

/// Pinball loss of predicting `y_hat` for target `y` at quantile level `tau`.
pub fn pinball_loss(tau: f64, y: f64, y_hat: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(pinball(tau, y - y_hat))
}

#[inline]
pub(crate) fn pinball(tau: f64, u: f64) -> f64 {
    if u >= 0.0 {
        tau * u
    } else {
        (tau - 1.0) * u
    }
}

/// Subgradient of the pinball loss with respect to `y_hat`: `-tau` when the
/// target lies above the prediction, `1 - tau` below, 0 at the kink.
#[inline]
pub fn pinball_subgradient(tau: f64, y: f64, y_hat: f64) -> f64 {
    let u = y - y_hat;
    if u > 0.0 {
        -tau
    } else if u < 0.0 {
        1.0 - tau
    } else {
        0.0
    }
}

pub fn mean_pinball(tau: f64, targets: &[f64], preds: &[f64]) -> f64 {
    let s: f64 = targets.iter().zip(preds).map(|(y, p)| pinball(tau, y - p)).sum();
    s / targets.len() as f64
}

/// The `ceil(tau * n)`-th smallest value, a minimizer of the summed pinball
/// loss over constant predictions. Reorders `values`.
pub fn tau_quantile(values: &mut [f64], tau: f64) -> f64 {
    assert!(!values.is_empty());
    let n = values.len();
    let k = ((tau * n as f64).ceil() as usize).clamp(1, n) - 1;
    let (_, v, _) = values.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
    *v
}
