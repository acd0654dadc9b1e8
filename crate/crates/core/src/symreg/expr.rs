use serde::{Deserialize, Serialize};

use crate::io::fmt_sig;

/// Smallest denominator magnitude accepted by `div`.
pub const DIV_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Log10,
    Sin,
    Cos,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Mul,
    Div,
    Pow,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 4] = [UnaryOp::Log10, UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Square];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Log10 => "log10",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Square => "square",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|u| u.name() == s)
    }

    #[inline]
    pub fn apply(self, x: f64) -> Option<f64> {
        let v = match self {
            UnaryOp::Log10 => {
                if x <= 0.0 {
                    return None;
                }
                x.log10()
            }
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Square => x * x,
        };
        v.is_finite().then_some(v)
    }
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Pow];

    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> Option<f64> {
        let v = match self {
            BinaryOp::Add => a + b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b.abs() < DIV_EPS {
                    return None;
                }
                a / b
            }
            BinaryOp::Pow => {
                if a < 0.0 && b.fract() != 0.0 {
                    return None;
                }
                a.powf(b)
            }
        };
        v.is_finite().then_some(v)
    }
}

/// Expression tree over named input columns, referenced by schema index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

/// Evaluation failed on a guarded operation or produced a non-finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainFault;

impl std::fmt::Display for DomainFault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("domain fault")
    }
}

/// Integer exponents in this range are structural and never refitted.
pub(crate) fn is_fixed_exponent(v: f64) -> bool {
    v.fract() == 0.0 && (-3.0..=3.0).contains(&v)
}

impl Expr {
    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn constant(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn unary(op: UnaryOp, a: Expr) -> Self {
        Expr::Unary(op, Box::new(a))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Add, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Self {
        Self::binary(BinaryOp::Pow, a, b)
    }

    pub fn log10(a: Expr) -> Self {
        Self::unary(UnaryOp::Log10, a)
    }

    pub fn eval(&self, row: &[f64]) -> Result<f64, DomainFault> {
        match self {
            Expr::Var(i) => {
                let v = row[*i];
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(DomainFault)
                }
            }
            Expr::Const(c) => Ok(*c),
            Expr::Unary(op, a) => op.apply(a.eval(row)?).ok_or(DomainFault),
            Expr::Binary(op, a, b) => op.apply(a.eval(row)?, b.eval(row)?).ok_or(DomainFault),
        }
    }

    /// Node count.
    pub fn complexity(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Const(_) => 1,
            Expr::Unary(_, a) => 1 + a.complexity(),
            Expr::Binary(_, a, b) => 1 + a.complexity() + b.complexity(),
        }
    }

    /// Levels on the longest root-to-leaf path; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Const(_) => 1,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn has_var(&self) -> bool {
        match self {
            Expr::Var(_) => true,
            Expr::Const(_) => false,
            Expr::Unary(_, a) => a.has_var(),
            Expr::Binary(_, a, b) => a.has_var() || b.has_var(),
        }
    }

    fn has_product(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Const(_) => false,
            Expr::Unary(_, a) => a.has_product(),
            Expr::Binary(op, a, b) => matches!(op, BinaryOp::Mul | BinaryOp::Div) || a.has_product() || b.has_product(),
        }
    }

    /// Longest chain of directly nested unary operators.
    fn unary_chain(&self) -> (usize, usize) {
        // (chain ending at this node, longest chain anywhere below)
        match self {
            Expr::Var(_) | Expr::Const(_) => (0, 0),
            Expr::Unary(_, a) => {
                let (c, m) = a.unary_chain();
                (c + 1, m.max(c + 1))
            }
            Expr::Binary(_, a, b) => (0, a.unary_chain().1.max(b.unary_chain().1)),
        }
    }

    /// Preorder node `index`; node 0 is the root.
    pub fn node(&self, index: usize) -> &Expr {
        fn walk<'a>(e: &'a Expr, k: &mut usize) -> Option<&'a Expr> {
            if *k == 0 {
                return Some(e);
            }
            *k -= 1;
            match e {
                Expr::Var(_) | Expr::Const(_) => None,
                Expr::Unary(_, a) => walk(a, k),
                Expr::Binary(_, a, b) => walk(a, k).or_else(|| walk(b, k)),
            }
        }
        let mut k = index;
        walk(self, &mut k).expect("node index in range")
    }

    /// Mutable access to the preorder node `index`.
    pub fn node_mut(&mut self, index: usize) -> &mut Expr {
        fn walk<'a>(e: &'a mut Expr, k: &mut usize) -> Option<&'a mut Expr> {
            if *k == 0 {
                return Some(e);
            }
            *k -= 1;
            match e {
                Expr::Var(_) | Expr::Const(_) => None,
                Expr::Unary(_, a) => walk(a, k),
                Expr::Binary(_, a, b) => {
                    let n = a.complexity();
                    if *k < n {
                        walk(a, k)
                    } else {
                        *k -= n;
                        walk(b, k)
                    }
                }
            }
        }
        let mut k = index;
        walk(self, &mut k).expect("node index in range")
    }

    /// Depth of preorder node `index` (the root is at depth 1).
    pub fn node_depth(&self, index: usize) -> usize {
        fn walk(e: &Expr, k: &mut usize, depth: usize) -> Option<usize> {
            if *k == 0 {
                return Some(depth);
            }
            *k -= 1;
            match e {
                Expr::Var(_) | Expr::Const(_) => None,
                Expr::Unary(_, a) => walk(a, k, depth + 1),
                Expr::Binary(_, a, b) => walk(a, k, depth + 1).or_else(|| walk(b, k, depth + 1)),
            }
        }
        let mut k = index;
        walk(self, &mut k, 1).expect("node index in range")
    }

    /// Refittable constants in preorder; fixed integer exponents are skipped.
    pub fn free_constants(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_free(&mut |c| out.push(*c));
        out
    }

    pub fn set_free_constants(&mut self, values: &[f64]) {
        let mut it = values.iter();
        self.visit_free_mut(&mut |c| *c = *it.next().expect("enough constants"));
    }

    fn visit_free(&self, f: &mut impl FnMut(&f64)) {
        match self {
            Expr::Var(_) => {}
            Expr::Const(c) => f(c),
            Expr::Unary(_, a) => a.visit_free(f),
            Expr::Binary(op, a, b) => {
                a.visit_free(f);
                if let (BinaryOp::Pow, Expr::Const(c)) = (op, b.as_ref()) {
                    if is_fixed_exponent(*c) {
                        return;
                    }
                }
                b.visit_free(f);
            }
        }
    }

    fn visit_free_mut(&mut self, f: &mut impl FnMut(&mut f64)) {
        match self {
            Expr::Var(_) => {}
            Expr::Const(c) => f(c),
            Expr::Unary(_, a) => a.visit_free_mut(f),
            Expr::Binary(op, a, b) => {
                a.visit_free_mut(f);
                if let (BinaryOp::Pow, Expr::Const(c)) = (*op, b.as_ref()) {
                    if is_fixed_exponent(*c) {
                        return;
                    }
                }
                b.visit_free_mut(f);
            }
        }
    }

    /// Replaces every variable-free subtree by its value. Fixed exponents
    /// stay as they are; a subtree that faults is left unfolded.
    pub fn fold_constants(self) -> Expr {
        match self {
            Expr::Var(_) | Expr::Const(_) => self,
            Expr::Unary(op, a) => {
                let a = a.fold_constants();
                if let Expr::Const(c) = a {
                    if let Some(v) = op.apply(c) {
                        return Expr::Const(v);
                    }
                }
                Expr::Unary(op, Box::new(a))
            }
            Expr::Binary(op, a, b) => {
                let a = a.fold_constants();
                let b = b.fold_constants();
                if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
                    if let Some(v) = op.apply(*x, *y) {
                        return Expr::Const(v);
                    }
                }
                Expr::Binary(op, Box::new(a), Box::new(b))
            }
        }
    }

    /// Every constant rounded to `digits` significant digits, as rendered.
    pub fn round_constants(&self, digits: usize) -> Expr {
        match self {
            Expr::Var(_) => self.clone(),
            Expr::Const(c) => Expr::Const(fmt_sig(*c, digits).parse().unwrap_or(*c)),
            Expr::Unary(op, a) => Expr::unary(*op, a.round_constants(digits)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.round_constants(digits), b.round_constants(digits)),
        }
    }

    /// Structure key: free constants are blanked, fixed exponents kept.
    pub fn skeleton(&self) -> String {
        let mut s = String::new();
        self.write_skeleton(&mut s);
        s
    }

    fn write_skeleton(&self, s: &mut String) {
        match self {
            Expr::Var(i) => {
                s.push('x');
                s.push_str(&i.to_string());
            }
            Expr::Const(_) => s.push('#'),
            Expr::Unary(op, a) => {
                s.push_str(op.name());
                s.push('(');
                a.write_skeleton(s);
                s.push(')');
            }
            Expr::Binary(op, a, b) => {
                s.push('(');
                a.write_skeleton(s);
                s.push(op.symbol());
                match (op, b.as_ref()) {
                    (BinaryOp::Pow, Expr::Const(c)) if is_fixed_exponent(*c) => s.push_str(&(*c as i64).to_string()),
                    _ => b.write_skeleton(s),
                }
                s.push(')');
            }
        }
    }
}

/// No `mul`/`div` anywhere under a `log10`, and no chain of directly nested
/// unary operators longer than `max_unary_nesting`.
pub fn validate_constraints(expr: &Expr, max_unary_nesting: usize) -> bool {
    fn logs_ok(e: &Expr) -> bool {
        match e {
            Expr::Var(_) | Expr::Const(_) => true,
            Expr::Unary(UnaryOp::Log10, a) => !a.has_product() && logs_ok(a),
            Expr::Unary(_, a) => logs_ok(a),
            Expr::Binary(_, a, b) => logs_ok(a) && logs_ok(b),
        }
    }
    logs_ok(expr) && expr.unary_chain().1 <= max_unary_nesting
}
