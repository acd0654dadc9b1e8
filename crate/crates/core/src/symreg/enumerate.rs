use super::data::SymDataset;
use super::expr::{validate_constraints, BinaryOp, Expr, UnaryOp};
use super::fit::{fit_constants, FitOptions};
use super::gp::ParetoFront;
use crate::rng::stream;

/// Placeholder for a free constant; non-integer so it is never taken for a
/// fixed exponent.
const PLACEHOLDER: f64 = 0.5;

/// Every tree of exactly `size` nodes over `n_vars` variables and one
/// constant placeholder, before constraint filtering.
fn trees_of_size(size: usize, n_vars: usize, memo: &mut Vec<Vec<Expr>>) -> Vec<Expr> {
    while memo.len() <= size {
        let s = memo.len();
        let mut out = Vec::new();
        if s == 1 {
            out.extend((0..n_vars).map(Expr::Var));
            out.push(Expr::Const(PLACEHOLDER));
        } else if s >= 2 {
            for op in UnaryOp::ALL {
                out.extend(memo[s - 1].iter().map(|t| Expr::unary(op, t.clone())));
            }
            for left in 1..s.saturating_sub(1) {
                let right = s - 1 - left;
                for op in BinaryOp::ALL {
                    for a in &memo[left] {
                        for b in &memo[right] {
                            out.push(Expr::binary(op, a.clone(), b.clone()));
                        }
                    }
                }
            }
        }
        memo.push(out);
    }
    memo[size].clone()
}

/// All constraint-satisfying trees with at most `max_complexity` nodes, in
/// order of size.
pub fn enumerate_skeletons(n_vars: usize, max_complexity: usize, max_unary_nesting: usize) -> Vec<Expr> {
    let mut memo = vec![Vec::new()];
    (1..=max_complexity)
        .flat_map(|s| trees_of_size(s, n_vars, &mut memo))
        .filter(|e| validate_constraints(e, max_unary_nesting))
        .collect()
}

/// Exhaustive front: every enumerated tree with its constants fitted on all rows.
pub fn brute_force_front(data: &SymDataset, max_complexity: usize, max_unary_nesting: usize, seed: u64) -> ParetoFront {
    let mut front = ParetoFront::new();
    for (i, e) in enumerate_skeletons(data.schema().len(), max_complexity, max_unary_nesting).into_iter().enumerate() {
        let mut rng = stream(seed, &[i as u64]);
        let f = fit_constants(&e, data, &mut rng, &FitOptions::default());
        front.insert(f.expr, f.rmse);
    }
    front
}
