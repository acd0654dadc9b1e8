use std::path::{Path, PathBuf};
use std::process::Command;

use radiolab::quantreg::TrainConfig;
use radiolab::radiomap::{GenParams, Split};
use radiolab::symreg::GpConfig;
use radiolab_cli::*;

fn small(seed: u64, out: Option<PathBuf>) -> RunConfig {
    let mut cfg = RunConfig { seed: Some(seed), out, ..RunConfig::default() };
    cfg.bench = BenchConfig { n_maps: 10, grid: GenParams { width: 24, height: 24, ..GenParams::default() }, ..BenchConfig::default() };
    cfg.train = TrainConfig { iterations: 25, ..TrainConfig::default() };
    cfg.uncertainty.train_pixels = 150;
    cfg.ablation.train_pixels = 150;
    cfg
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push((p.strip_prefix(dir).unwrap_or(&p).to_path_buf(), std::fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn gen_writes_every_map_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let a = cmd_gen(&small(3, Some(tmp.path().join("a")))).unwrap();
    let b = cmd_gen(&small(3, Some(tmp.path().join("b")))).unwrap();
    for sub in ["grids", "headers", "radiomaps"] {
        assert_eq!(std::fs::read_dir(a.join(sub)).unwrap().count(), 10, "{sub}");
    }
    let fa = files(&a);
    assert_eq!(fa, files(&b));
    assert!(fa.iter().any(|(p, _)| p == Path::new("manifest.json")));

    let loaded = Benchmark::load(&a).unwrap();
    let fresh = Benchmark::generate(&small(3, None).bench, 3).unwrap();
    assert_eq!(loaded.maps.len(), 10);
    assert_eq!(loaded.split().assignments(), fresh.split().assignments());
    for (l, f) in loaded.maps.iter().zip(&fresh.maps) {
        assert_eq!(l.grid, f.grid);
        assert_eq!(l.map.width, f.map.width);
    }
    // Every map lands in exactly one split.
    let total: usize = [Split::Train, Split::Cal, Split::Test].iter().map(|&s| fresh.indices(s).len()).sum();
    assert_eq!(total, 10);
}

#[test]
fn default_gen_writes_sixty_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = cmd_gen(&RunConfig { seed: Some(1), out: Some(tmp.path().join("b")), ..RunConfig::default() }).unwrap();
    for sub in ["grids", "radiomaps"] {
        assert_eq!(std::fs::read_dir(dir.join(sub)).unwrap().count(), 60, "{sub}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.as_array().map(Vec::len), Some(60), "{manifest}");
}

#[test]
fn invalid_density_leaves_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    let mut cfg = small(1, Some(out.clone()));
    cfg.bench.grid.density = 0.95;
    let err = cmd_gen(&cfg).unwrap_err();
    assert_eq!(err.kind(), "params");
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0, "staging directory left behind");
}

#[test]
fn uncertainty_intervals_are_consistent() {
    let cfg = small(5, None);
    let bench = Benchmark::generate(&cfg.bench, 5).unwrap();
    let run = run_uncertainty(&bench, &cfg, 5).unwrap();
    assert!((1.0 - run.report.alpha - 0.9).abs() < 1e-12);
    assert_eq!(run.maps.len(), bench.indices(Split::Test).len());
    let r = &run.report;
    if r.correction >= 0.0 {
        let gap = r.conformal.mean_width - r.vanilla.mean_width;
        assert!((gap - 2.0 * r.correction).abs() < 1e-9, "{gap} vs {}", r.correction);
    }
    for m in &run.maps {
        for ((w, lo), hi) in m.widths().iter().zip(&m.lo).zip(&m.hi) {
            if w.is_nan() {
                continue;
            }
            assert!(*w >= 0.0);
            assert_eq!(*w, hi - lo);
        }
    }
    let tmp = tempfile::tempdir().unwrap();
    write_uncertainty(&run, tmp.path()).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["target_coverage"].as_f64(), Some(0.9));
    let csv = std::fs::read_to_string(tmp.path().join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let heatmaps = std::fs::read_dir(tmp.path().join("heatmaps")).unwrap().count();
    assert_eq!(heatmaps, 3 * run.maps.len());
}

#[test]
fn identical_arms_score_identically() {
    let mut cfg = small(8, None);
    cfg.ablation.physics = cfg.ablation.baseline.clone();
    let bench = Benchmark::generate(&cfg.bench, 8).unwrap();
    let table = run_ablation(&bench, &cfg, 8).unwrap();
    assert_eq!(table.arms.len(), 2);
    assert_eq!(table.arms[0].test_rmse, table.arms[1].test_rmse);
    assert_eq!(table.arms[0].train_rmse, table.arms[1].train_rmse);
    assert_eq!(table.relative_improvement, 0.0);
}

#[test]
fn physics_arm_has_more_channels() {
    let cfg = small(2, None);
    let bench = Benchmark::generate(&cfg.bench, 2).unwrap();
    let table = run_ablation(&bench, &cfg, 2).unwrap();
    assert!(table.arms[1].features.len() > table.arms[0].features.len());
    assert!(table.arms.iter().all(|a| a.test_rmse.is_finite() && a.test_rmse > 0.0));
}

#[test]
fn custom_csv_identity_is_found_at_complexity_one() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("table.csv");
    let mut text = String::from("d,target\n");
    for i in 0..50 {
        let d = 1.0 + 0.5 * f64::from(i);
        text.push_str(&format!("{d},{d}\n"));
    }
    std::fs::write(&csv, text).unwrap();
    let mut cfg = small(1, Some(tmp.path().join("out")));
    cfg.discover.task = Task::Custom;
    cfg.discover.csv = Some(csv);
    cfg.discover.gp = GpConfig { population: 60, generations: 5, restarts: 1, ..GpConfig::default() };
    let dir = cmd_discover(&cfg).unwrap();
    let front = std::fs::read_to_string(dir.join("front.csv")).unwrap();
    let mut rows = front.lines().skip(1).map(|l| l.split(',').collect::<Vec<_>>());
    let first = rows.next().unwrap();
    assert_eq!(first[0], "1");
    assert_eq!(first[2], "\"d\"");
    let complexities: Vec<usize> = front.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(complexities.windows(2).all(|w| w[0] < w[1]));
    let summary: DiscoverSummary = serde_json::from_slice(&std::fs::read(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.best_rmse_db, 0.0);
}

#[test]
fn custom_task_without_csv_is_a_config_error() {
    let mut cfg = small(1, None);
    cfg.discover.task = Task::Custom;
    assert_eq!(run_discover(&cfg, 1).unwrap_err().kind(), "config");
}

fn radiolab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_radiolab"))
}

#[test]
fn missing_seed_fails_with_one_line() {
    let tmp = tempfile::tempdir().unwrap();
    let out = radiolab().args(["gen", "--out"]).arg(tmp.path().join("x")).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[config]"), "{err}");
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn binary_reads_config_and_flags_override_it() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        "seed = 1\n\n[bench]\nn_maps = 4\n\n[bench.grid]\nwidth = 16\nheight = 16\nmax_side = 4\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("bench");
    let out = radiolab().args(["gen", "--seed", "9", "--config"]).arg(&config).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let record = std::fs::read_to_string(out_dir.join("bench.toml")).unwrap();
    assert!(record.contains("seed = 9"), "{record}");
    assert_eq!(std::fs::read_dir(out_dir.join("grids")).unwrap().count(), 4);

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\nunknown = 2\n").unwrap();
    let out = radiolab().args(["gen", "--config"]).arg(&bad).arg("--out").arg(tmp.path().join("y")).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]"));
}
