use rand::Rng;
use rand_distr::StandardNormal;

use super::data::SymDataset;
use super::expr::{is_fixed_exponent, BinaryOp, Expr, UnaryOp};
use crate::rng::StreamRng;

/// Column-vectorized evaluation plan for one expression structure. Subtrees
/// without refittable constants are evaluated once at compile time.
pub(crate) struct Program<'a> {
    instrs: Vec<Instr>,
    pre: Vec<Vec<f64>>,
    targets: &'a [f64],
    n_params: usize,
}

#[derive(Debug, Clone, Copy)]
enum Instr {
    Pre(usize),
    Param(usize),
    Fixed(f64),
    Un(UnaryOp),
    Bin(BinaryOp),
}

enum Val {
    Scalar(f64),
    Pre(usize),
    Owned(Vec<f64>),
}

fn has_free_constant(e: &Expr) -> bool {
    match e {
        Expr::Var(_) => false,
        Expr::Const(_) => true,
        Expr::Unary(_, a) => has_free_constant(a),
        Expr::Binary(BinaryOp::Pow, a, b) if matches!(b.as_ref(), Expr::Const(c) if is_fixed_exponent(*c)) => has_free_constant(a),
        Expr::Binary(_, a, b) => has_free_constant(a) || has_free_constant(b),
    }
}

/// Row-wise evaluation of a whole subtree over the data columns.
fn eval_columns(e: &Expr, data: &SymDataset) -> Option<Vec<f64>> {
    let n = data.len();
    Some(match e {
        Expr::Var(i) => {
            let c = &data.columns()[*i];
            if c.iter().any(|v| !v.is_finite()) {
                return None;
            }
            c.clone()
        }
        Expr::Const(c) => vec![*c; n],
        Expr::Unary(op, a) => {
            let mut v = eval_columns(a, data)?;
            for x in v.iter_mut() {
                *x = op.apply(*x)?;
            }
            v
        }
        Expr::Binary(op, a, b) => {
            let mut v = eval_columns(a, data)?;
            let w = eval_columns(b, data)?;
            for (x, y) in v.iter_mut().zip(&w) {
                *x = op.apply(*x, *y)?;
            }
            v
        }
    })
}

impl<'a> Program<'a> {
    /// `None` when a constant-free subtree already faults on the data.
    pub(crate) fn compile(expr: &Expr, data: &'a SymDataset) -> Option<Self> {
        let mut p = Program { instrs: Vec::new(), pre: Vec::new(), targets: data.targets(), n_params: 0 };
        p.emit(expr, data)?;
        Some(p)
    }

    fn emit(&mut self, e: &Expr, data: &SymDataset) -> Option<()> {
        if !has_free_constant(e) {
            if let Expr::Const(c) = e {
                self.instrs.push(Instr::Fixed(*c));
            } else {
                self.pre.push(eval_columns(e, data)?);
                self.instrs.push(Instr::Pre(self.pre.len() - 1));
            }
            return Some(());
        }
        match e {
            Expr::Var(_) => unreachable!("variables carry no constants"),
            Expr::Const(_) => {
                self.instrs.push(Instr::Param(self.n_params));
                self.n_params += 1;
            }
            Expr::Unary(op, a) => {
                self.emit(a, data)?;
                self.instrs.push(Instr::Un(*op));
            }
            Expr::Binary(op, a, b) => {
                self.emit(a, data)?;
                match (op, b.as_ref()) {
                    (BinaryOp::Pow, Expr::Const(c)) if is_fixed_exponent(*c) => self.instrs.push(Instr::Fixed(*c)),
                    _ => self.emit(b, data)?,
                }
                self.instrs.push(Instr::Bin(*op));
            }
        }
        Some(())
    }

    pub(crate) fn n_params(&self) -> usize {
        self.n_params
    }

    fn slice<'v>(&'v self, v: &'v Val) -> &'v [f64] {
        match v {
            Val::Pre(k) => &self.pre[*k],
            Val::Owned(o) => o,
            Val::Scalar(_) => unreachable!("scalars are handled separately"),
        }
    }

    fn owned(&self, v: Val) -> Vec<f64> {
        match v {
            Val::Owned(o) => o,
            Val::Pre(k) => self.pre[k].clone(),
            Val::Scalar(_) => unreachable!("scalars are handled separately"),
        }
    }

    /// Predictions for the given constants; `None` on any fault.
    fn predict(&self, params: &[f64]) -> Option<Val> {
        let mut stack: Vec<Val> = Vec::with_capacity(8);
        for ins in &self.instrs {
            match *ins {
                Instr::Pre(k) => stack.push(Val::Pre(k)),
                Instr::Param(i) => stack.push(Val::Scalar(params[i])),
                Instr::Fixed(c) => stack.push(Val::Scalar(c)),
                Instr::Un(op) => {
                    let a = stack.pop().expect("operand");
                    let r = match a {
                        Val::Scalar(x) => Val::Scalar(op.apply(x)?),
                        other => {
                            let mut v = self.owned(other);
                            for x in v.iter_mut() {
                                *x = op.apply(*x)?;
                            }
                            Val::Owned(v)
                        }
                    };
                    stack.push(r);
                }
                Instr::Bin(op) => {
                    let b = stack.pop().expect("operand");
                    let a = stack.pop().expect("operand");
                    let r = match (a, b) {
                        (Val::Scalar(x), Val::Scalar(y)) => Val::Scalar(op.apply(x, y)?),
                        (Val::Scalar(x), b) => {
                            let mut v = self.owned(b);
                            for y in v.iter_mut() {
                                *y = op.apply(x, *y)?;
                            }
                            Val::Owned(v)
                        }
                        (a, Val::Scalar(y)) => {
                            let mut v = self.owned(a);
                            for x in v.iter_mut() {
                                *x = op.apply(*x, y)?;
                            }
                            Val::Owned(v)
                        }
                        (a, b) => {
                            let mut v = self.owned(a);
                            let w = self.slice(&b);
                            for (x, y) in v.iter_mut().zip(w) {
                                *x = op.apply(*x, *y)?;
                            }
                            Val::Owned(v)
                        }
                    };
                    stack.push(r);
                }
            }
        }
        stack.pop()
    }

    /// Sum of squared errors, +inf on any fault.
    pub(crate) fn sse(&self, params: &[f64]) -> f64 {
        let s = match self.predict(params) {
            None => return f64::INFINITY,
            Some(Val::Scalar(c)) => self.targets.iter().map(|y| (c - y).powi(2)).sum::<f64>(),
            Some(v) => self.slice(&v).iter().zip(self.targets).map(|(p, y)| (p - y).powi(2)).sum::<f64>(),
        };
        if s.is_finite() {
            s
        } else {
            f64::INFINITY
        }
    }

    fn residuals(&self, params: &[f64]) -> Option<Vec<f64>> {
        match self.predict(params)? {
            Val::Scalar(c) => Some(self.targets.iter().map(|y| c - y).collect()),
            v => {
                let r: Vec<f64> = self.slice(&v).iter().zip(self.targets).map(|(p, y)| p - y).collect();
                r.iter().all(|x| x.is_finite()).then_some(r)
            }
        }
    }

    fn rmse_of(&self, sse: f64) -> f64 {
        (sse / self.targets.len() as f64).sqrt()
    }
}

/// Root mean squared error over all rows; +inf if any row faults.
pub fn rmse(expr: &Expr, data: &SymDataset) -> f64 {
    if data.is_empty() {
        return f64::INFINITY;
    }
    match Program::compile(expr, data) {
        Some(p) => p.rmse_of(p.sse(&expr.free_constants())),
        None => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Independent starts; the first uses the constants already in the tree.
    pub starts: usize,
    pub sweeps: usize,
    pub polish_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { starts: 4, sweeps: 2, polish_iterations: 20 }
    }
}

/// Result of constant fitting: the tree with fitted constants and its RMSE
/// (+inf when every start faults).
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub expr: Expr,
    pub rmse: f64,
}

/// Parabola vertex through `(x - h, fm)`, `(x, f0)`, `(x + h, fp)`.
fn vertex(x: f64, h: f64, fm: f64, f0: f64, fp: f64) -> Option<f64> {
    let curv = fp - 2.0 * f0 + fm;
    if !(curv > 0.0) || !curv.is_finite() {
        return None;
    }
    let v = x - h * (fp - fm) / (2.0 * curv);
    v.is_finite().then_some(v)
}

fn sse_at(prog: &Program, p: &mut [f64], i: usize, v: f64) -> f64 {
    let old = p[i];
    p[i] = v;
    let s = prog.sse(p);
    p[i] = old;
    s
}

/// One coordinate step: an additive probe pair, then a multiplicative pair
/// (`x * (1 +- 5%)`), each followed by a jump to the fitted parabola vertex.
fn refine_coordinate(prog: &Program, p: &mut [f64], i: usize, best: &mut f64) {
    let steps = [0.1 * p[i].abs().max(1.0), 0.05 * p[i].abs()];
    for h in steps {
        if h == 0.0 {
            continue;
        }
        let x = p[i];
        let f0 = *best;
        let fm = sse_at(prog, p, i, x - h);
        let fp = sse_at(prog, p, i, x + h);
        let mut cands = vec![(x - h, fm), (x + h, fp)];
        if let Some(v) = vertex(x, h, fm, f0, fp) {
            cands.push((v, sse_at(prog, p, i, v)));
        }
        for (v, s) in cands {
            if s < *best {
                *best = s;
                p[i] = v;
            }
        }
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Damped Gauss-Newton on a forward-difference Jacobian.
fn polish(prog: &Program, p: &mut [f64], best: &mut f64, iterations: usize) {
    let m = p.len();
    let mut lambda = 1e-3;
    for _ in 0..iterations {
        if *best <= 0.0 {
            return;
        }
        let Some(r) = prog.residuals(p) else { return };
        let mut jac = Vec::with_capacity(m);
        for j in 0..m {
            let h = 1e-7 * p[j].abs().max(1.0);
            let old = p[j];
            p[j] = old + h;
            let rj = prog.residuals(p);
            p[j] = old;
            let Some(rj) = rj else { return };
            jac.push(rj.iter().zip(&r).map(|(a, b)| (a - b) / h).collect::<Vec<f64>>());
        }
        let mut jtj = vec![vec![0.0; m]; m];
        let mut jtr = vec![0.0; m];
        for a in 0..m {
            jtr[a] = jac[a].iter().zip(&r).map(|(x, y)| x * y).sum();
            for b in a..m {
                let v: f64 = jac[a].iter().zip(&jac[b]).map(|(x, y)| x * y).sum();
                jtj[a][b] = v;
                jtj[b][a] = v;
            }
        }
        let mut improved = false;
        for _ in 0..8 {
            let mut a = jtj.clone();
            for (k, row) in a.iter_mut().enumerate() {
                row[k] += lambda * row[k].max(1e-12);
            }
            let Some(step) = solve(a, jtr.iter().map(|v| -v).collect()) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(&step).map(|(x, d)| x + d).collect();
            let s = prog.sse(&trial);
            if s < *best {
                let gain = (*best - s) / *best;
                *best = s;
                p.copy_from_slice(&trial);
                lambda = (lambda / 3.0).max(1e-12);
                improved = gain > 1e-12;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            return;
        }
    }
}

/// Local search from `p`: coordinate sweeps with a pattern move after each
/// sweep, then a Gauss-Newton polish. Returns the final SSE.
fn local_search(prog: &Program, p: &mut [f64], options: &FitOptions) -> f64 {
    let mut best = prog.sse(p);
    if !best.is_finite() {
        return best;
    }
    for _ in 0..options.sweeps {
        let before = p.to_vec();
        let start = best;
        for i in 0..p.len() {
            refine_coordinate(prog, p, i, &mut best);
        }
        let pattern: Vec<f64> = p.iter().zip(&before).map(|(x, b)| x + (x - b)).collect();
        let s = prog.sse(&pattern);
        if s < best {
            best = s;
            p.copy_from_slice(&pattern);
        }
        if best >= start * (1.0 - 1e-9) {
            break;
        }
    }
    polish(prog, p, &mut best, options.polish_iterations);
    best
}

/// Small enough that further starts cannot matter.
const EXACT_RMSE: f64 = 1e-10;

/// Refits the free constants of `expr` to minimize RMSE on `data`.
/// Never returns a worse RMSE than the constants already in the tree.
pub fn fit_constants(expr: &Expr, data: &SymDataset, rng: &mut StreamRng, options: &FitOptions) -> Fitted {
    let unfit = Fitted { expr: expr.clone(), rmse: f64::INFINITY };
    if data.is_empty() {
        return unfit;
    }
    let Some(prog) = Program::compile(expr, data) else { return unfit };
    let initial = expr.free_constants();
    debug_assert_eq!(initial.len(), prog.n_params());
    let mut best_p = initial.clone();
    let mut best = prog.sse(&initial);
    if prog.n_params() == 0 {
        return Fitted { expr: expr.clone(), rmse: prog.rmse_of(best) };
    }
    for start in 0..options.starts.max(1) {
        if prog.rmse_of(best) < EXACT_RMSE {
            break;
        }
        let mut p = if start == 0 {
            initial.clone()
        } else {
            initial
                .iter()
                .map(|&c| {
                    let z: f64 = rng.sample(StandardNormal);
                    let u: f64 = rng.sample(StandardNormal);
                    c * (1.0 + 0.5 * z) + u
                })
                .collect()
        };
        let s = local_search(&prog, &mut p, options);
        if s < best {
            best = s;
            best_p = p;
        }
    }
    let mut out = expr.clone();
    out.set_free_constants(&best_p);
    Fitted { expr: out, rmse: prog.rmse_of(best) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiomap::fspl_constant;
    use crate::rng::stream;

    fn ds(f: impl Fn(f64) -> f64) -> SymDataset {
        let rows: Vec<Vec<f64>> = (1..=50).map(|i| vec![i as f64 * 7.3]).collect();
        let t = rows.iter().map(|r| f(r[0])).collect();
        SymDataset::new(vec!["d".into()], &rows, t).unwrap()
    }

    fn fit(e: &Expr, data: &SymDataset) -> Fitted {
        fit_constants(e, data, &mut stream(1, &[]), &FitOptions::default())
    }

    #[test]
    fn constant_fit() {
        let f = fit(&Expr::Const(0.0), &ds(|_| 7.0));
        assert_eq!(f.expr, Expr::Const(7.0));
        assert!(f.rmse < 1e-12);
    }

    #[test]
    fn linear_fit() {
        let f = fit(&Expr::mul(Expr::Const(1.0), Expr::Var(0)), &ds(|d| 3.0 * d));
        assert!((f.expr.free_constants()[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn fspl_residual_constant() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![10.0 * 1.06f64.powi(i)]).collect();
        let t = rows.iter().map(|r| 20.0 * r[0].log10() + 20.0 * 5.9f64.log10() + fspl_constant()).collect();
        let data = SymDataset::new(vec!["d".into()], &rows, t).unwrap();
        let e = Expr::add(Expr::mul(Expr::Const(20.0), Expr::log10(Expr::Var(0))), Expr::Const(0.0));
        let f = fit(&e, &data);
        let c = f.expr.free_constants();
        assert!((c[0] - 20.0).abs() < 1e-6);
        assert!((c[1] - (20.0 * 5.9f64.log10() + fspl_constant())).abs() < 1e-3);
    }

    #[test]
    fn nonlinear_constants() {
        let data = ds(|d| 2.0 * d.powf(0.7) + 1.0);
        let e = Expr::add(Expr::mul(Expr::Const(1.0), Expr::pow(Expr::Var(0), Expr::Const(0.5))), Expr::Const(0.0));
        let f = fit(&e, &data);
        assert!(f.rmse < 1e-6, "{:?}", f);
    }

    #[test]
    fn never_worse_than_input() {
        let data = ds(|d| (d / 50.0).sin() * 4.0);
        let e = Expr::mul(Expr::Const(3.9), Expr::unary(UnaryOp::Sin, Expr::mul(Expr::Const(0.021), Expr::Var(0))));
        let f = fit(&e, &data);
        assert!(f.rmse <= rmse(&e, &data));
    }

    #[test]
    fn faults() {
        let data = ds(|d| d);
        let e = Expr::log10(Expr::add(Expr::Var(0), Expr::Const(-1000.0)));
        assert_eq!(rmse(&e, &data), f64::INFINITY);
        let f = fit(&Expr::log10(Expr::mul(Expr::Const(-1.0), Expr::Var(0))), &ds(|d| d));
        assert!(f.rmse.is_finite() || f.rmse == f64::INFINITY);
        assert_eq!(fit(&Expr::log10(Expr::Const(-1.0)), &data).rmse, f64::INFINITY);
    }

    #[test]
    fn rmse_identities() {
        let data = ds(|d| d * 0.5 + 1.0);
        let mean = data.targets().iter().sum::<f64>() / data.len() as f64;
        let sd = (data.targets().iter().map(|y| (y - mean).powi(2)).sum::<f64>() / data.len() as f64).sqrt();
        assert!((rmse(&Expr::Const(mean), &data) - sd).abs() < 1e-9);
        let truth = Expr::add(Expr::mul(Expr::Var(0), Expr::Const(0.5)), Expr::Const(1.0));
        assert_eq!(rmse(&truth, &data), 0.0);
    }
}
