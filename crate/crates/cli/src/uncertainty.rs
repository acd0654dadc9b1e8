//! Quantile pair training, conformal calibration and the coverage audit.

use std::path::Path;

use radiolab::conformal::{
    audit_coverage, calibrate, conformal_interval, ConformalCalibration, CoverageReport, LosLabels,
};
use radiolab::features::{los_map, FeatureSet, PixelDataset, Sampling};
use radiolab::io::{fmt_sig, Pgm};
use radiolab::quantreg::{fit_quantile_model, predict_interval, QuantileModel, TrainConfig};
use radiolab::radiomap::Split;
use radiolab::rng::derive_seed;
use serde::Serialize;

use crate::bench::{write_with, Benchmark};
use crate::config::RunConfig;
use crate::error::{io_err, CliError, Result};

/// Lower and upper conformal bounds over one test map; NaN on buildings.
#[derive(Debug, Clone, PartialEq)]
pub struct MapIntervals {
    pub index: usize,
    pub width: usize,
    pub height: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl MapIntervals {
    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).collect()
    }
}

#[derive(Debug, Clone)]
pub struct UncertaintyRun {
    pub seed: u64,
    pub features: FeatureSet,
    pub n_train: usize,
    pub lo: QuantileModel,
    pub hi: QuantileModel,
    pub calibration: ConformalCalibration,
    pub report: CoverageReport,
    pub maps: Vec<MapIntervals>,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    seed: u64,
    target_coverage: f64,
    /// `1 - alpha + 1 / (n_cal + 1)`.
    coverage_upper_band: f64,
    features: Vec<String>,
    n_train: usize,
    train_maps: Vec<u32>,
    cal_maps: &'a [u32],
    #[serde(flatten)]
    report: &'a CoverageReport,
}

fn los_labels(bench: &Benchmark, data: &PixelDataset) -> Vec<bool> {
    let mut out = Vec::with_capacity(data.len());
    let mut cached: Option<(u32, Vec<f64>)> = None;
    for (&g, &(x, y)) in data.groups().iter().zip(data.cells()) {
        if cached.as_ref().is_none_or(|(k, _)| *k != g) {
            let m = &bench.maps[g as usize];
            cached = Some((g, los_map(&m.grid, &m.tx)));
        }
        let (_, los) = cached.as_ref().expect("filled above");
        out.push(los[y * bench.maps[g as usize].grid.width() + x] > 0.5);
    }
    out
}

pub fn run_uncertainty(bench: &Benchmark, cfg: &RunConfig, seed: u64) -> Result<UncertaintyRun> {
    let ucfg = &cfg.uncertainty;
    let alpha = ucfg.alpha;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let features = FeatureSet::parse(&ucfg.features)?;
    let pick_seed = derive_seed(seed, &[11]);
    let train = bench.split_pixels(Split::Train, &features, |_| Sampling::Random { k: ucfg.train_pixels, seed: pick_seed })?;
    let cal = bench.split_pixels(Split::Cal, &features, |_| Sampling::All)?;
    let test = bench.split_pixels(Split::Test, &features, |_| Sampling::All)?;

    let fit = |tau: f64, k: u64| {
        let tc = TrainConfig { seed: derive_seed(seed, &[10, k]), ..cfg.train.clone() };
        fit_quantile_model(&train, tau, &tc)
    };
    let lo = fit(alpha / 2.0, 0)?;
    let hi = fit(1.0 - alpha / 2.0, 1)?;
    let calibration = calibrate(&lo, &hi, &cal, alpha)?;
    let los = los_labels(bench, &test);
    let report = audit_coverage(&calibration, &lo, &hi, &test, LosLabels::Given(&los))?;

    let mut maps = Vec::new();
    for i in bench.indices(Split::Test) {
        let px = bench.pixels(i, &features, Sampling::All)?;
        let m = &bench.maps[i].map;
        let (mut lo_map, mut hi_map) = (vec![f64::NAN; m.pl.len()], vec![f64::NAN; m.pl.len()]);
        for (row, &(x, y)) in px.rows().zip(px.cells()) {
            let ci = conformal_interval(&calibration, &predict_interval(&lo, &hi, row)?);
            lo_map[y * m.width + x] = ci.interval.lo();
            hi_map[y * m.width + x] = ci.interval.hi();
        }
        maps.push(MapIntervals { index: i, width: m.width, height: m.height, lo: lo_map, hi: hi_map });
    }
    Ok(UncertaintyRun { seed, features, n_train: train.len(), lo, hi, calibration, report, maps })
}

/// Grayscale image where white is the smallest value in `range` and black
/// the largest; masked (NaN) and non-finite cells are black.
pub fn heatmap(width: usize, height: usize, values: &[f64], range: (f64, f64)) -> Pgm {
    let (min, max) = range;
    let span = max - min;
    let pixels = values
        .iter()
        .map(|&v| {
            if !v.is_finite() {
                0
            } else if !(span > 0.0) {
                255
            } else {
                (255.0 * (max - v) / span).round().clamp(0.0, 255.0) as u16
            }
        })
        .collect();
    Pgm { width, height, maxval: 255, pixels }
}

fn finite_range<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

/// `report.json`, `comparison.csv`, the two quantile models and one
/// lower/upper/width heatmap triple per test map.
pub fn write_uncertainty(run: &UncertaintyRun, dir: &Path) -> Result<()> {
    let r = &run.report;
    let file = ReportFile {
        seed: run.seed,
        target_coverage: 1.0 - r.alpha,
        coverage_upper_band: 1.0 - r.alpha + 1.0 / (r.n_cal as f64 + 1.0),
        features: run.features.names(),
        n_train: run.n_train,
        train_maps: run.lo.train_groups.clone(),
        cal_maps: &run.calibration.cal_groups,
        report: r,
    };
    write_with(&dir.join("report.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &file).map_err(|e| CliError::Data(e.to_string()))?;
        writeln_io(w, "", "report.json")
    })?;
    write_with(&dir.join("comparison.csv"), |w| {
        writeln_io(w, "interval,coverage,mean_width,los_coverage,nlos_coverage,los_mean_width,nlos_mean_width", "comparison.csv")?;
        for (name, all, strata) in [("vanilla", &r.vanilla, &r.vanilla_strata), ("conformal", &r.conformal, &r.strata)] {
            let cells = [all.coverage, all.mean_width, strata.los.coverage, strata.nlos.coverage, strata.los.mean_width, strata.nlos.mean_width];
            let line = format!("{name},{}", cells.iter().map(|v| fmt_sig(*v, 6)).collect::<Vec<_>>().join(","));
            writeln_io(w, &line, "comparison.csv")?;
        }
        Ok(())
    })?;
    for (name, m) in [("model_lo.json", &run.lo), ("model_hi.json", &run.hi)] {
        write_with(&dir.join(name), |w| writeln_io(w, &m.to_json()?, name))?;
    }
    let hm = dir.join("heatmaps");
    std::fs::create_dir_all(&hm).map_err(io_err(&hm))?;
    for m in &run.maps {
        let bounds = finite_range(m.lo.iter().chain(&m.hi));
        let widths = m.widths();
        let wrange = (0.0, finite_range(widths.iter()).1);
        for (tag, values, range) in [("lo", &m.lo, bounds), ("hi", &m.hi, bounds), ("width", &widths, wrange)] {
            let pgm = heatmap(m.width, m.height, values, range);
            write_with(&hm.join(format!("map_{:03}_{tag}.pgm", m.index)), |w| Ok(pgm.write(w)?))?;
        }
    }
    Ok(())
}

pub(crate) fn writeln_io(w: &mut impl std::io::Write, line: &str, what: &str) -> Result<()> {
    writeln!(w, "{line}").map_err(io_err(what))
}
