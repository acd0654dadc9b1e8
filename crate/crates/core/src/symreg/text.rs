use super::expr::{BinaryOp, Expr, UnaryOp};
use super::{Result, SymRegError};
use crate::io::fmt_sig;

/// Significant digits used for rendered constants.
pub const CONST_DIGITS: usize = 6;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinaryOp::Add, ..) => 1,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
        Expr::Binary(BinaryOp::Pow, ..) => 3,
        _ => 4,
    }
}

/// Infix text with the fewest parentheses that parse back to the same tree.
pub fn render_expr(expr: &Expr, schema: &[String]) -> String {
    let mut s = String::new();
    write_expr(expr, schema, &mut s);
    s
}

fn write_child(e: &Expr, schema: &[String], parens: bool, s: &mut String) {
    if parens {
        s.push('(');
    }
    write_expr(e, schema, s);
    if parens {
        s.push(')');
    }
}

fn write_expr(e: &Expr, schema: &[String], s: &mut String) {
    match e {
        Expr::Var(i) => s.push_str(&schema[*i]),
        Expr::Const(c) => s.push_str(&fmt_sig(*c, CONST_DIGITS)),
        Expr::Unary(op, a) => {
            s.push_str(op.name());
            write_child(a, schema, true, s);
        }
        Expr::Binary(op, a, b) => {
            let p = precedence(e);
            let (pa, pb) = (precedence(a), precedence(b));
            let (left, right) = if *op == BinaryOp::Pow { (pa <= p, pb < p) } else { (pa < p, pb <= p) };
            write_child(a, schema, left, s);
            match op {
                BinaryOp::Add => s.push_str(" + "),
                _ => s.push(op.symbol()),
            }
            write_child(b, schema, right, s);
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    schema: &'a [String],
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> SymRegError {
        SymRegError::Parse { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(' ') {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while self.eat('+') {
            lhs = Expr::add(lhs, self.product()?);
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.power()?;
        loop {
            if self.eat('*') {
                lhs = Expr::mul(lhs, self.power()?);
            } else if self.eat('/') {
                lhs = Expr::div(lhs, self.power()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat('^') {
            return Ok(Expr::pow(base, self.power()?));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<Expr> {
        let rest = &self.src[self.pos..];
        let bytes = rest.as_bytes();
        let mut end = 0;
        if end < bytes.len() && bytes[end] == b'-' {
            end += 1;
        }
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'-' || bytes[k] == b'+') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let v: f64 = rest[..end].parse().map_err(|_| self.err(format!("bad number {:?}", &rest[..end])))?;
        self.pos += end;
        Ok(Expr::Const(v))
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' || c == '-' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => {
                let rest = &self.src[self.pos..];
                let len = rest.find(|ch: char| !(ch.is_alphanumeric() || ch == '_')).unwrap_or(rest.len());
                let name = &rest[..len];
                self.pos += len;
                if let Some(op) = UnaryOp::from_name(name) {
                    if self.eat('(') {
                        let a = self.sum()?;
                        if !self.eat(')') {
                            return Err(self.err("expected ')'"));
                        }
                        return Ok(Expr::unary(op, a));
                    }
                }
                match self.schema.iter().position(|s| s == name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(self.err(format!("unknown variable {name:?}"))),
                }
            }
            Some(c) => Err(self.err(format!("unexpected {c:?}"))),
        }
    }
}

/// Parses the text produced by [`render_expr`].
pub fn parse_expr(text: &str, schema: &[String]) -> Result<Expr> {
    let mut p = Parser { src: text, pos: 0, schema };
    let e = p.sum()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}
