use super::model::{ModelParams, TrainConfig};
use super::pinball::{pinball, pinball_subgradient, tau_quantile};
use crate::features::PixelDataset;

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

/// Full-batch subgradient descent on standardized features with a
/// `lr / sqrt(t + 1)` step; the best iterate seen is kept.
pub(crate) fn fit(train: &PixelDataset, tau: f64, config: &TrainConfig) -> (ModelParams, Vec<f64>) {
    let n = train.len();
    let d = train.n_features();
    let (mut mean, mut std) = (Vec::with_capacity(d), Vec::with_capacity(d));
    for j in 0..d {
        let (m, s) = mean_std(&train.rows().map(|r| r[j]).collect::<Vec<_>>());
        mean.push(m);
        std.push(s);
    }
    let xs: Vec<f64> = train.rows().flat_map(|r| (0..d).map(|j| (r[j] - mean[j]) / std[j]).collect::<Vec<_>>()).collect();

    let center = tau_quantile(&mut train.targets().to_vec(), tau);
    let (_, scale) = mean_std(train.targets());
    let ys: Vec<f64> = train.targets().iter().map(|y| (y - center) / scale).collect();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut best = (f64::INFINITY, w.clone(), b);
    let mut trace = Vec::with_capacity(config.iterations);
    let mut grad = vec![0.0; d];
    for t in 0..config.iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        let mut loss = 0.0;
        for (row, &y) in xs.chunks_exact(d.max(1)).zip(&ys) {
            let pred = b + row.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>();
            loss += pinball(tau, y - pred);
            let g = pinball_subgradient(tau, y, pred);
            if g != 0.0 {
                grad_b += g;
                for (gj, x) in grad.iter_mut().zip(row) {
                    *gj += g * x;
                }
            }
        }
        let loss = loss / n as f64;
        trace.push(loss * scale);
        if loss < best.0 {
            best = (loss, w.clone(), b);
        }
        let step = config.learning_rate / ((t + 1) as f64).sqrt() / n as f64;
        b -= step * grad_b;
        for (wj, gj) in w.iter_mut().zip(&grad) {
            *wj -= step * gj;
        }
    }
    let (_, weights, bias) = best;
    (ModelParams::Linear { mean, std, center, scale, weights, bias }, trace)
}
