use proptest::prelude::*;
use radiolab::conformal::*;
use radiolab::quantreg::PredictionInterval;

#[test]
fn monte_carlo_coverage_lies_in_the_finite_sample_band() {
    for &alpha in &[0.05, 0.1, 0.2] {
        for &n_cal in &[99usize, 999] {
            let mc = monte_carlo_coverage(alpha, n_cal, 1000, 2000, 5).unwrap();
            assert_eq!(mc.lower_bound, 1.0 - alpha);
            assert!((mc.upper_bound - (1.0 - alpha + 1.0 / (n_cal as f64 + 1.0))).abs() < 1e-15);
            assert!(
                mc.mean_coverage >= mc.lower_bound - 0.01 && mc.mean_coverage <= mc.upper_bound + 0.01,
                "alpha {alpha} n_cal {n_cal}: {}",
                mc.mean_coverage
            );
        }
    }
}

#[test]
fn calibration_json_writes_infinity_as_null() {
    let c = ConformalCalibration::from_scores(&[0.5; 5], 0.1).unwrap();
    assert!(c.is_unbounded());
    let text = serde_json::to_string(&c).unwrap();
    assert!(text.contains("\"correction\":null"), "{text}");
    let back: ConformalCalibration = serde_json::from_str(&text).unwrap();
    assert_eq!(back.correction, f64::INFINITY);
}

fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0..20.0f64, 1..300)
}

proptest! {
    #[test]
    fn correction_is_monotone_in_alpha(s in scores(), a in 0.01..0.99f64, b in 0.01..0.99f64) {
        let (small, large) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(empirical_quantile(&s, small).unwrap() >= empirical_quantile(&s, large).unwrap());
    }

    #[test]
    fn score_is_positive_exactly_outside(lo in -50.0..50.0f64, w in 0.0..30.0f64, y in -100.0..100.0f64) {
        let iv = PredictionInterval::new(lo, lo + w);
        let s = conformity_score(&iv, y);
        prop_assert_eq!(s > 0.0, !iv.contains(y));
        prop_assert_eq!(s, (lo - y).max(y - (lo + w)));
    }

    #[test]
    fn corrected_interval_contains_y_iff_score_within_correction(
        lo in -50.0..50.0f64,
        w in 0.0..30.0f64,
        y in -100.0..100.0f64,
        q in -10.0..10.0f64,
    ) {
        let iv = PredictionInterval::new(lo, lo + w);
        let calib = ConformalCalibration { alpha: 0.1, correction: q, n_cal: 100, cal_groups: vec![] };
        let c = conformal_interval(&calib, &iv);
        if !c.collapsed {
            prop_assert_eq!(c.contains(y), conformity_score(&iv, y) <= q);
            prop_assert!((c.width() - (w + 2.0 * q)).abs() < 1e-9);
        } else {
            prop_assert!(w + 2.0 * q < 0.0);
            prop_assert_eq!(c.width(), 0.0);
        }
    }

    #[test]
    fn in_sample_coverage_meets_the_rank(s in scores(), alpha in 0.01..0.99f64) {
        let q = empirical_quantile(&s, alpha).unwrap();
        let k = conformal_rank(s.len(), alpha);
        let covered = s.iter().filter(|&&v| v <= q).count();
        if q.is_finite() {
            prop_assert!(covered >= k);
        } else {
            prop_assert!(k > s.len());
        }
    }
}
