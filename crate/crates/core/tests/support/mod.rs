//! Independent oracles shared with the CLI acceptance suite.

use std::collections::BTreeSet;

/// Cells whose closed square meets the segment between two cell centers,
/// found by sampling the segment at every multiple of `1 / n`. With
/// `n = 2 |dx| |dy|` every grid-line crossing lands on a sample, and between
/// samples the segment stays inside one cell, so the sampling is exact.
pub fn dense_cells(a: (usize, usize), b: (usize, usize)) -> BTreeSet<(usize, usize)> {
    let (x0, y0) = (a.0 as i64, a.1 as i64);
    let (dx, dy) = (b.0 as i64 - x0, b.1 as i64 - y0);
    let n = 2 * dx.abs().max(1) * dy.abs().max(1);
    // Coordinates in units of 1 / (2n); cell c spans [2nc - n, 2nc + n].
    let covering = |v: i64| -> Vec<i64> {
        let lo = (v - n).div_euclid(2 * n) + i64::from((v - n).rem_euclid(2 * n) != 0);
        let hi = (v + n).div_euclid(2 * n);
        (lo..=hi).collect()
    };
    let mut out = BTreeSet::new();
    for k in 0..=n {
        let xs = covering(2 * n * x0 + 2 * dx * k);
        let ys = covering(2 * n * y0 + 2 * dy * k);
        for &x in &xs {
            for &y in &ys {
                out.insert((x as usize, y as usize));
            }
        }
    }
    out
}

/// Sort, then take the `ceil((n + 1)(1 - alpha))`-th value by counting.
pub fn sorted_quantile(scores: &[f64], alpha: f64) -> f64 {
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut k = 1usize;
    while (k as f64) < (n + 1.0) * (1.0 - alpha) - 1e-9 {
        k += 1;
    }
    if k > s.len() {
        f64::INFINITY
    } else {
        s[k - 1]
    }
}
