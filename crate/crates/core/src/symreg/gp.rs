use std::collections::HashMap;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::SymDataset;
use super::expr::{validate_constraints, BinaryOp, Expr, UnaryOp};
use super::fit::{fit_constants, rmse, FitOptions, Fitted};
use super::text::{render_expr, CONST_DIGITS};
use super::{Result, SymRegError};
use crate::io::fmt_sig;
use crate::rng::{stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub p_crossover: f64,
    pub p_subtree: f64,
    pub p_point: f64,
    pub p_constant: f64,
    /// Chance that a new `^` gets an integer exponent rather than a free constant.
    pub p_integer_exponent: f64,
    pub max_depth: usize,
    /// Node-count cap on offspring.
    pub max_complexity: usize,
    pub max_unary_nesting: usize,
    /// Fitness penalty in dB per node.
    pub parsimony: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Wall-clock budget shared by all restarts.
    pub time_budget_secs: f64,
    /// Rows used to score candidates; archive entries are refitted on all rows.
    pub subsample: usize,
    pub constant_starts: usize,
    /// Stop once the front holds an entry at or below this RMSE.
    pub stop_rmse: f64,
    pub elitism: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            population: 500,
            generations: 200,
            tournament: 7,
            p_crossover: 0.7,
            p_subtree: 0.1,
            p_point: 0.1,
            p_constant: 0.1,
            p_integer_exponent: 0.97,
            max_depth: 8,
            max_complexity: 30,
            max_unary_nesting: 2,
            parsimony: 0.01,
            restarts: 5,
            seed: 0,
            time_budget_secs: 600.0,
            subsample: 200,
            constant_starts: 4,
            stop_rmse: 1e-4,
            elitism: 5,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SymRegError::InvalidConfig(m.to_string()));
        if self.population < 2 || self.generations < 1 || self.tournament < 1 || self.restarts < 1 {
            return bad("population >= 2, generations, tournament and restarts >= 1 required");
        }
        if self.max_depth < 2 || self.max_complexity < 3 || self.max_unary_nesting < 1 || self.subsample < 1 || self.constant_starts < 1 {
            return bad("max_depth >= 2, max_complexity >= 3, max_unary_nesting, subsample and constant_starts >= 1 required");
        }
        let ps = [self.p_crossover, self.p_subtree, self.p_point, self.p_constant];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) || ps.iter().sum::<f64>() <= 0.0 {
            return bad("operator probabilities must lie in [0, 1] and not all be 0");
        }
        if !(0.0..=1.0).contains(&self.p_integer_exponent) {
            return bad("p_integer_exponent must lie in [0, 1]");
        }
        if !(self.parsimony >= 0.0) || !(self.time_budget_secs > 0.0) || !(self.stop_rmse >= 0.0) {
            return bad("parsimony and stop_rmse must be >= 0, time budget > 0");
        }
        if self.elitism >= self.population {
            return bad("elitism must be below the population size");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub complexity: usize,
    pub rmse: f64,
    pub expr: Expr,
}

/// Best expression per size; RMSE strictly decreases with complexity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    entries: Vec<FrontEntry>,
}

/// Improvements smaller than this are treated as ties.
const RMSE_TIE: f64 = 1e-9;

impl ParetoFront {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[FrontEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<&FrontEntry> {
        self.entries.last()
    }

    pub fn best_rmse(&self) -> f64 {
        self.best().map_or(f64::INFINITY, |e| e.rmse)
    }

    pub fn get(&self, complexity: usize) -> Option<&FrontEntry> {
        self.entries.iter().find(|e| e.complexity == complexity)
    }

    /// Lowest RMSE among entries no larger than `complexity`.
    fn bound(&self, complexity: usize) -> f64 {
        self.entries.iter().filter(|e| e.complexity <= complexity).map(|e| e.rmse).fold(f64::INFINITY, f64::min)
    }

    pub fn would_accept(&self, complexity: usize, rmse: f64) -> bool {
        rmse.is_finite() && rmse < self.bound(complexity) - RMSE_TIE
    }

    /// Inserts unless an entry at most as complex is at least as good; drops
    /// the entries the newcomer dominates.
    pub fn insert(&mut self, expr: Expr, rmse: f64) -> bool {
        let complexity = expr.complexity();
        if !self.would_accept(complexity, rmse) {
            return false;
        }
        self.entries.retain(|e| !(e.complexity >= complexity && e.rmse >= rmse));
        let at = self.entries.partition_point(|e| e.complexity < complexity);
        self.entries.insert(at, FrontEntry { complexity, rmse, expr });
        true
    }

    pub fn merge(&mut self, other: &ParetoFront) {
        for e in &other.entries {
            self.insert(e.expr.clone(), e.rmse);
        }
    }

    /// Columns `complexity,rmse_db,expression`, sorted by complexity.
    pub fn write_csv<W: Write>(&self, schema: &[String], mut w: W) -> std::io::Result<()> {
        writeln!(w, "complexity,rmse_db,expression")?;
        for e in &self.entries {
            writeln!(w, "{},{},\"{}\"", e.complexity, fmt_sig(e.rmse, 6), render_expr(&e.expr, schema))?;
        }
        Ok(())
    }
}

/// One line of the run log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenRecord {
    pub restart: usize,
    pub gen: usize,
    pub best_rmse: f64,
    pub archive_size: usize,
    pub evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub front: ParetoFront,
    pub log: Vec<GenRecord>,
    /// True when a restart stopped on the time budget.
    pub timed_out: bool,
}

pub fn evolve(data: &SymDataset, config: &GpConfig) -> Result<ParetoFront> {
    Ok(evolve_with_log(data, config, &mut |_| {})?.front)
}

#[derive(Clone)]
struct Individual {
    expr: Expr,
    fitness: f64,
}

struct Grammar {
    n_vars: usize,
    max_depth: usize,
    max_complexity: usize,
    max_unary_nesting: usize,
    p_integer_exponent: f64,
}

impl Grammar {
    fn constant(&self, rng: &mut StreamRng) -> Expr {
        Expr::Const(rng.random_range(-10.0..10.0))
    }

    fn exponent(&self, rng: &mut StreamRng) -> Expr {
        if rng.random_bool(self.p_integer_exponent) {
            const CHOICES: [f64; 5] = [-3.0, -2.0, -1.0, 2.0, 3.0];
            Expr::Const(CHOICES[rng.random_range(0..CHOICES.len())])
        } else {
            Expr::Const(rng.random_range(-2.0..2.0))
        }
    }

    fn terminal(&self, rng: &mut StreamRng) -> Expr {
        if rng.random_range(0..=self.n_vars) < self.n_vars {
            Expr::Var(rng.random_range(0..self.n_vars))
        } else {
            self.constant(rng)
        }
    }

    /// Random tree of at most `depth` levels; `full` grows every branch to
    /// the limit.
    fn tree(&self, rng: &mut StreamRng, depth: usize, full: bool) -> Expr {
        let n_terms = self.n_vars + 1;
        let n_funcs = UnaryOp::ALL.len() + BinaryOp::ALL.len();
        if depth <= 1 || (!full && rng.random_range(0..n_terms + n_funcs) < n_terms) {
            return self.terminal(rng);
        }
        let k = rng.random_range(0..n_funcs);
        if k < UnaryOp::ALL.len() {
            Expr::unary(UnaryOp::ALL[k], self.tree(rng, depth - 1, full))
        } else {
            let op = BinaryOp::ALL[k - UnaryOp::ALL.len()];
            let rhs = if op == BinaryOp::Pow { self.exponent(rng) } else { self.tree(rng, depth - 1, full) };
            Expr::binary(op, self.tree(rng, depth - 1, full), rhs)
        }
    }

    fn accept(&self, e: Expr) -> Option<Expr> {
        let e = e.fold_constants();
        (e.depth() <= self.max_depth && e.complexity() <= self.max_complexity && e.has_var() && validate_constraints(&e, self.max_unary_nesting)).then_some(e)
    }

    /// Node index biased 9:1 towards operators when the tree has any.
    fn pick_node(&self, rng: &mut StreamRng, e: &Expr) -> usize {
        let n = e.complexity();
        let internal: Vec<usize> = (0..n).filter(|&i| !matches!(e.node(i), Expr::Var(_) | Expr::Const(_))).collect();
        if !internal.is_empty() && rng.random_bool(0.9) {
            internal[rng.random_range(0..internal.len())]
        } else {
            rng.random_range(0..n)
        }
    }

    fn crossover(&self, rng: &mut StreamRng, a: &Expr, b: &Expr) -> Expr {
        let mut child = a.clone();
        let i = self.pick_node(rng, a);
        let j = self.pick_node(rng, b);
        *child.node_mut(i) = b.node(j).clone();
        child
    }

    /// Replaces a random node with a fresh tree, or half the time grows it
    /// in place into `node + tree` or `node * tree`.
    fn subtree_mutation(&self, rng: &mut StreamRng, a: &Expr) -> Expr {
        let mut child = a.clone();
        let i = rng.random_range(0..a.complexity());
        let room = self.max_depth.saturating_sub(a.node_depth(i)) + 1;
        let depth = rng.random_range(1..=room.clamp(1, 4));
        let node = child.node_mut(i);
        *node = if rng.random_bool(0.5) {
            let op = if rng.random_bool(0.5) { BinaryOp::Add } else { BinaryOp::Mul };
            let extra = self.tree(rng, depth.min(3), false);
            Expr::binary(op, node.clone(), extra)
        } else {
            self.tree(rng, depth, false)
        };
        child
    }

    fn point_mutation(&self, rng: &mut StreamRng, a: &Expr) -> Expr {
        let mut child = a.clone();
        let i = rng.random_range(0..a.complexity());
        let node = child.node_mut(i);
        *node = match node.clone() {
            Expr::Var(_) | Expr::Const(_) => self.terminal(rng),
            Expr::Unary(_, x) => Expr::Unary(UnaryOp::ALL[rng.random_range(0..UnaryOp::ALL.len())], x),
            Expr::Binary(op, x, y) => {
                let new = BinaryOp::ALL[rng.random_range(0..BinaryOp::ALL.len())];
                if new == BinaryOp::Pow && op != BinaryOp::Pow {
                    Expr::Binary(new, x, Box::new(self.exponent(rng)))
                } else {
                    Expr::Binary(new, x, y)
                }
            }
        };
        child
    }

    fn constant_mutation(&self, rng: &mut StreamRng, a: &Expr) -> Expr {
        let mut child = a.clone();
        let jittered: Vec<f64> = a
            .free_constants()
            .into_iter()
            .map(|c| {
                let z: f64 = rng.sample(StandardNormal);
                let u: f64 = rng.sample(StandardNormal);
                c * (1.0 + 0.1 * z) + 0.1 * u
            })
            .collect();
        child.set_free_constants(&jittered);
        child
    }
}

/// Candidates are scored with their constants rounded as in the rendered
/// text, so fits that rely on cancelling huge constants lose their edge.
fn as_rendered(f: Fitted, data: &SymDataset) -> Fitted {
    if !f.rmse.is_finite() {
        return f;
    }
    let expr = f.expr.round_constants(CONST_DIGITS);
    let rmse = rmse(&expr, data);
    Fitted { expr, rmse }
}

fn fitness(rmse: f64, complexity: usize, parsimony: f64) -> f64 {
    if rmse.is_finite() {
        rmse + parsimony * complexity as f64
    } else {
        f64::INFINITY
    }
}

fn tournament<'a>(rng: &mut StreamRng, pop: &'a [Individual], k: usize) -> &'a Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..k {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.fitness < best.fitness {
            best = c;
        }
    }
    best
}

struct Candidate {
    expr: Expr,
    /// Refit even if the structure is cached (constant mutation offspring).
    refit: bool,
}

/// Runs every restart and merges their fronts. `observe` sees each candidate
/// structure before it is scored.
pub fn evolve_with_log(data: &SymDataset, config: &GpConfig, observe: &mut dyn FnMut(&Expr)) -> Result<RunResult> {
    config.validate()?;
    if data.is_empty() {
        return Err(SymRegError::InvalidData("empty dataset".into()));
    }
    let started = Instant::now();
    let mut front = ParetoFront::new();
    let mut log = Vec::new();
    let mut timed_out = false;
    for restart in 0..config.restarts {
        let share = config.time_budget_secs * (restart + 1) as f64 / config.restarts as f64;
        let deadline = started + Duration::from_secs_f64(share);
        let (f, out) = run_restart(data, config, restart, deadline, observe, &mut log);
        front.merge(&f);
        timed_out |= out;
        if front.best_rmse() <= config.stop_rmse {
            break;
        }
    }
    Ok(RunResult { front, log, timed_out })
}

fn run_restart(
    data: &SymDataset,
    config: &GpConfig,
    restart: usize,
    deadline: Instant,
    observe: &mut dyn FnMut(&Expr),
    log: &mut Vec<GenRecord>,
) -> (ParetoFront, bool) {
    let r = restart as u64;
    let grammar = Grammar {
        n_vars: data.schema().len(),
        max_depth: config.max_depth,
        max_complexity: config.max_complexity,
        max_unary_nesting: config.max_unary_nesting,
        p_integer_exponent: config.p_integer_exponent,
    };
    let sub = if data.len() > config.subsample {
        let mut rng = stream(config.seed, &[r, u64::MAX]);
        let mut idx = sample(&mut rng, data.len(), config.subsample).into_vec();
        idx.sort_unstable();
        data.select(&idx)
    } else {
        data.clone()
    };
    let sub_opts = FitOptions { starts: config.constant_starts, ..FitOptions::default() };
    let full_opts = FitOptions { starts: 1, ..FitOptions::default() };

    let mut cache: HashMap<String, Fitted> = HashMap::new();
    let mut front = ParetoFront::new();
    let mut evals = 0usize;

    // Ramped half-and-half over depths 2..=6.
    let depths: Vec<usize> = (2..=config.max_depth.min(6)).collect();
    let mut candidates = Vec::with_capacity(config.population);
    for i in 0..config.population {
        let mut rng = stream(config.seed, &[r, 0, i as u64]);
        let depth = depths[i % depths.len()];
        let full = (i / depths.len()) % 2 == 0;
        let expr = loop {
            if let Some(e) = grammar.accept(grammar.tree(&mut rng, depth, full)) {
                break e;
            }
        };
        candidates.push(Candidate { expr, refit: false });
    }

    let mut timed_out = false;
    for gen in 0..config.generations {
        let pop = score(data, &sub, config, &sub_opts, &full_opts, (r, gen), candidates, &mut cache, &mut front, &mut evals, observe);
        log.push(GenRecord { restart, gen, best_rmse: front.best_rmse(), archive_size: front.entries().len(), evals });
        if front.best_rmse() <= config.stop_rmse {
            break;
        }
        if Instant::now() >= deadline {
            timed_out = true;
            break;
        }
        if gen + 1 == config.generations {
            break;
        }
        candidates = breed(&grammar, config, &pop, (r, gen + 1));
    }
    (front, timed_out)
}

#[allow(clippy::too_many_arguments)]
fn score(
    data: &SymDataset,
    sub: &SymDataset,
    config: &GpConfig,
    sub_opts: &FitOptions,
    full_opts: &FitOptions,
    (r, gen): (u64, usize),
    candidates: Vec<Candidate>,
    cache: &mut HashMap<String, Fitted>,
    front: &mut ParetoFront,
    evals: &mut usize,
    observe: &mut dyn FnMut(&Expr),
) -> Vec<Individual> {
    // Unique structures needing a fit, in first-seen order.
    let keys: Vec<String> = candidates.iter().map(|c| c.expr.skeleton()).collect();
    let mut jobs: Vec<usize> = Vec::new();
    let mut queued: HashMap<&str, usize> = HashMap::new();
    for (i, c) in candidates.iter().enumerate() {
        let k = keys[i].as_str();
        if (c.refit || !cache.contains_key(k)) && !queued.contains_key(k) {
            queued.insert(k, i);
            jobs.push(i);
            observe(&c.expr);
        }
    }
    let fitted: Vec<Fitted> = jobs
        .par_iter()
        .map(|&i| {
            let mut rng = stream(config.seed, &[r, gen as u64, i as u64, 1]);
            as_rendered(fit_constants(&candidates[i].expr, sub, &mut rng, sub_opts), sub)
        })
        .collect();
    *evals += jobs.len();

    let mut fresh: Vec<(usize, Fitted)> = Vec::new();
    for (&i, f) in jobs.iter().zip(fitted) {
        let key = &keys[i];
        let better = cache.get(key).is_none_or(|old| f.rmse < old.rmse);
        if better {
            cache.insert(key.clone(), f.clone());
            fresh.push((i, f));
        }
    }

    // Refit newcomers within 20% of the front on all rows before they may enter the front.
    let promising: Vec<&Fitted> =
        fresh.iter().map(|(_, f)| f).filter(|f| f.rmse.is_finite() && f.rmse < 1.2 * front.bound(f.expr.complexity()) + RMSE_TIE).collect();
    let refits: Vec<Fitted> = promising
        .par_iter()
        .enumerate()
        .map(|(j, f)| {
            let mut rng = stream(config.seed, &[r, gen as u64, j as u64, 2]);
            as_rendered(fit_constants(&f.expr, data, &mut rng, full_opts), data)
        })
        .collect();
    for f in refits {
        front.insert(f.expr, f.rmse);
    }

    keys.iter()
        .map(|k| {
            let f = &cache[k];
            Individual { expr: f.expr.clone(), fitness: fitness(f.rmse, f.expr.complexity(), config.parsimony) }
        })
        .collect()
}

fn breed(grammar: &Grammar, config: &GpConfig, pop: &[Individual], (r, gen): (u64, usize)) -> Vec<Candidate> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| pop[a].fitness.total_cmp(&pop[b].fitness).then(a.cmp(&b)));
    let mut next: Vec<Candidate> = order[..config.elitism].iter().map(|&i| Candidate { expr: pop[i].expr.clone(), refit: false }).collect();
    let total = config.p_crossover + config.p_subtree + config.p_point + config.p_constant;
    for i in next.len()..config.population {
        let mut rng = stream(config.seed, &[r, gen as u64, i as u64]);
        let u = rng.random::<f64>() * total;
        let parent = tournament(&mut rng, pop, config.tournament).expr.clone();
        let mut child = None;
        let mut refit = false;
        for _ in 0..8 {
            let raw = if u < config.p_crossover {
                let other = tournament(&mut rng, pop, config.tournament).expr.clone();
                grammar.crossover(&mut rng, &parent, &other)
            } else if u < config.p_crossover + config.p_subtree {
                grammar.subtree_mutation(&mut rng, &parent)
            } else if u < config.p_crossover + config.p_subtree + config.p_point {
                grammar.point_mutation(&mut rng, &parent)
            } else {
                refit = true;
                grammar.constant_mutation(&mut rng, &parent)
            };
            if let Some(e) = grammar.accept(raw) {
                child = Some(e);
                break;
            }
        }
        next.push(match child {
            Some(expr) => Candidate { expr, refit },
            None => Candidate { expr: parent, refit: false },
        });
    }
    next
}
