//! Symbolic regression runs and the checks applied to their fronts.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use radiolab::radiomap::fspl_constant;
use radiolab::symreg::{
    eval_expr, evolve_with_log, make_fspl_dataset, make_winner_dataset, render_expr, winner_folded_constant, winner_path_loss, FrontEntry, GpConfig,
    ParetoFront, Ranges, RunResult, SymDataset, WINNER_CONSTANT,
};
use serde::{Deserialize, Serialize};

use crate::bench::write_with;
use crate::config::{RunConfig, Task};
use crate::error::{io_err, CliError, Result};
use crate::uncertainty::writeln_io;

/// Front entries at or below this RMSE count as exact fits.
pub const EXACT_FIT_DB: f64 = 1e-3;

/// Spread allowed when testing that an entry differs from a reference law
/// by a constant alone.
const SPREAD_DB: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsplCheck {
    /// The simplest exact entry that reduces to the free-space form.
    pub complexity: Option<usize>,
    pub expression: Option<String>,
    pub rmse_db: Option<f64>,
    /// Its additive constant, read off at `d = f = 1`.
    pub constant: Option<f64>,
    pub reference_constant: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinnerCheck {
    pub complexity: usize,
    pub expression: String,
    pub rmse_db: f64,
    /// The best entry's value at `d = f = h = 1`, where every log term vanishes.
    pub folded_constant: f64,
    /// `31.46 - 23 log10(5)`.
    pub derived_constant: f64,
    /// `31.46 + 10 log10(5)`, the difference read literally from the
    /// wording that names `-10 log10 5` as the folded term.
    pub literal_reading_constant: f64,
    /// True when the entry's frequency dependence is `23 log10(f)`.
    pub log10_f_term: bool,
    /// Largest deviation from the ground-truth law on points outside the
    /// training ranges.
    pub max_extrapolation_error_db: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoverSummary {
    pub task: Task,
    pub seed: u64,
    pub exemplars: usize,
    pub schema: Vec<String>,
    pub generations: usize,
    pub timed_out: bool,
    pub best_rmse_db: f64,
    pub best_expression: Option<String>,
    pub fspl: Option<FsplCheck>,
    pub winner: Option<WinnerCheck>,
}

#[derive(Debug, Clone)]
pub struct DiscoverRun {
    pub data: SymDataset,
    pub result: RunResult,
    pub summary: DiscoverSummary,
}

pub fn task_dataset(cfg: &RunConfig, seed: u64) -> Result<SymDataset> {
    let d = &cfg.discover;
    if d.exemplars == 0 && d.task != Task::Custom {
        return Err(CliError::Config("exemplars must be >= 1".into()));
    }
    Ok(match d.task {
        Task::Fspl => make_fspl_dataset(d.exemplars, seed, Ranges::fspl()),
        Task::Winner => make_winner_dataset(d.exemplars, seed, Ranges::winner()),
        Task::Custom => {
            let path = d.csv.as_ref().ok_or_else(|| CliError::Config("task custom needs `csv`".into()))?;
            let file = File::open(path).map_err(io_err(path))?;
            SymDataset::read_csv(BufReader::new(file)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        }
    })
}

fn eval(e: &FrontEntry, row: &[f64]) -> f64 {
    eval_expr(&e.expr, row).unwrap_or(f64::NAN)
}

/// Log-spaced probe points, including some beyond the training ranges.
const D_PROBES: [f64; 7] = [1.0, 3.0, 10.0, 100.0, 1e3, 1e4, 1e5];
const F_PROBES: [f64; 6] = [0.1, 0.45, 1.0, 3.0, 6.0, 30.0];
const H_PROBES: [f64; 5] = [1.0, 5.0, 25.0, 100.0, 300.0];

/// Finds the simplest exact entry whose difference from
/// `20 log10 d + 20 log10 f` is constant over the probe grid.
pub fn fspl_check(front: &ParetoFront, schema: &[String]) -> FsplCheck {
    let reference_constant = fspl_constant();
    let hit = front.entries().iter().filter(|e| e.rmse < EXACT_FIT_DB).find_map(|e| {
        let mut gaps = Vec::new();
        for &d in &D_PROBES {
            for &f in &F_PROBES {
                gaps.push(eval(e, &[d, f]) - 20.0 * d.log10() - 20.0 * f.log10());
            }
        }
        let (lo, hi) = gaps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &g| (a.min(g), b.max(g)));
        (hi - lo < SPREAD_DB).then(|| (e, eval(e, &[1.0, 1.0])))
    });
    match hit {
        Some((e, c)) => FsplCheck {
            complexity: Some(e.complexity),
            expression: Some(render_expr(&e.expr, schema)),
            rmse_db: Some(e.rmse),
            constant: Some(c),
            reference_constant,
            pass: (c - reference_constant).abs() < 0.05,
        },
        None => FsplCheck { complexity: None, expression: None, rmse_db: None, constant: None, reference_constant, pass: false },
    }
}

/// Reads the additive constant off the best entry and checks its frequency
/// term.
pub fn winner_check(front: &ParetoFront, schema: &[String]) -> Option<WinnerCheck> {
    let best = front.best()?;
    let folded = eval(best, &[1.0, 1.0, 1.0]);
    let log10_f_term = F_PROBES.iter().all(|&f| {
        let delta = eval(best, &[1.0, f, 1.0]) - folded;
        (delta - 23.0 * f.log10()).abs() < 0.05
    });
    let mut worst = 0.0f64;
    for &d in &D_PROBES {
        for &f in &F_PROBES {
            for &h in &H_PROBES {
                let err = (eval(best, &[d, f, h]) - winner_path_loss(d, f, h)).abs();
                worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
            }
        }
    }
    let derived = winner_folded_constant();
    Some(WinnerCheck {
        complexity: best.complexity,
        expression: render_expr(&best.expr, schema),
        rmse_db: best.rmse,
        folded_constant: folded,
        derived_constant: derived,
        literal_reading_constant: WINNER_CONSTANT + 10.0 * 5f64.log10(),
        log10_f_term,
        max_extrapolation_error_db: worst,
        pass: best.rmse < 0.5 && log10_f_term && (folded - 15.38).abs() <= 0.1,
    })
}

pub fn run_discover(cfg: &RunConfig, seed: u64) -> Result<DiscoverRun> {
    let data = task_dataset(cfg, seed)?;
    let gp = GpConfig { seed, ..cfg.discover.gp };
    let result = evolve_with_log(&data, &gp, &mut |_| {})?;
    let schema = data.schema().to_vec();
    let fspl = (cfg.discover.task == Task::Fspl).then(|| fspl_check(&result.front, &schema));
    let winner = if cfg.discover.task == Task::Winner { winner_check(&result.front, &schema) } else { None };
    let summary = DiscoverSummary {
        task: cfg.discover.task,
        seed,
        exemplars: data.len(),
        schema: schema.clone(),
        generations: result.log.len(),
        timed_out: result.timed_out,
        best_rmse_db: result.front.best_rmse(),
        best_expression: result.front.best().map(|e| render_expr(&e.expr, &schema)),
        fspl,
        winner,
    };
    Ok(DiscoverRun { data, result, summary })
}

/// `front.csv`, `log.jsonl`, `summary.json` and the dataset as `data.csv`.
pub fn write_discover(run: &DiscoverRun, dir: &Path) -> Result<()> {
    write_with(&dir.join("front.csv"), |w| run.result.front.write_csv(run.data.schema(), w).map_err(io_err("front.csv")))?;
    write_with(&dir.join("log.jsonl"), |w| {
        for rec in &run.result.log {
            let line = serde_json::to_string(rec).map_err(|e| CliError::Data(e.to_string()))?;
            writeln_io(w, &line, "log.jsonl")?;
        }
        Ok(())
    })?;
    write_with(&dir.join("summary.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &run.summary).map_err(|e| CliError::Data(e.to_string()))?;
        writeln_io(w, "", "summary.json")
    })?;
    write_with(&dir.join("data.csv"), |w| run.data.write_csv(w).map_err(io_err("data.csv")))
}
