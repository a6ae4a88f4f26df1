//! Expression trees over selected-feature terminals.
//!
//! Text form is a prefix S-expression:
//!
//! ```text
//! expr     := terminal | "(" unary expr ")" | "(" binary expr expr ")"
//! terminal := "f" index          ; index into the selected feature set
//! unary    := "sin" | "cos"
//! binary   := "+" | "-" | "*"
//! ```
//!
//! Tokens are separated by whitespace or parentheses, e.g. `(+ f3 (sin f7))`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 2] = [UnaryOp::Sin, UnaryOp::Cos];

    fn apply(self, x: f64) -> f64 {
        match self {
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
        }
    }
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 3] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul];

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Feature(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

/// Evaluated constructed feature; `clamped` counts rows whose raw value was
/// not finite and was replaced by the finite extreme.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructedColumn {
    pub values: Vec<f64>,
    pub clamped: usize,
}

impl Expr {
    pub fn feature(j: usize) -> Self {
        Expr::Feature(j)
    }

    pub fn unary(op: UnaryOp, a: Expr) -> Self {
        Expr::Unary(op, Box::new(a))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Terminals have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Feature(_) => 0,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Expr::Feature(_) => 1,
            Expr::Unary(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn max_feature(&self) -> usize {
        match self {
            Expr::Feature(j) => *j,
            Expr::Unary(_, a) => a.max_feature(),
            Expr::Binary(_, a, b) => a.max_feature().max(b.max_feature()),
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Expr::Feature(_))
    }

    /// Structural validity for `terminals` features and a depth bound.
    pub fn is_valid(&self, terminals: usize, max_depth: usize) -> bool {
        self.max_feature() < terminals && self.depth() <= max_depth
    }

    /// Node at preorder position `idx` with its depth.
    pub fn node(&self, idx: usize) -> Option<(&Expr, usize)> {
        fn walk<'a>(e: &'a Expr, idx: &mut usize, depth: usize) -> Option<(&'a Expr, usize)> {
            if *idx == 0 {
                return Some((e, depth));
            }
            *idx -= 1;
            match e {
                Expr::Feature(_) => None,
                Expr::Unary(_, a) => walk(a, idx, depth + 1),
                Expr::Binary(_, a, b) => walk(a, idx, depth + 1).or_else(|| walk(b, idx, depth + 1)),
            }
        }
        let mut i = idx;
        walk(self, &mut i, 0)
    }

    /// Copy of `self` with the subtree at preorder `idx` replaced.
    pub fn replace(&self, idx: usize, with: &Expr) -> Expr {
        fn walk(e: &Expr, idx: &mut Option<usize>, with: &Expr) -> Expr {
            match idx {
                Some(0) => {
                    *idx = None;
                    return with.clone();
                }
                Some(i) => *i -= 1,
                None => return e.clone(),
            }
            match e {
                Expr::Feature(j) => Expr::Feature(*j),
                Expr::Unary(op, a) => Expr::unary(*op, walk(a, idx, with)),
                Expr::Binary(op, a, b) => {
                    let a = walk(a, idx, with);
                    let b = walk(b, idx, with);
                    Expr::binary(*op, a, b)
                }
            }
        }
        walk(self, &mut Some(idx), with)
    }

    #[inline]
    pub fn eval_row(&self, row: &[f64]) -> f64 {
        match self {
            Expr::Feature(j) => row[*j],
            Expr::Unary(op, a) => op.apply(a.eval_row(row)),
            Expr::Binary(op, a, b) => op.apply(a.eval_row(row), b.eval_row(row)),
        }
    }

    /// Row-wise evaluation over a matrix whose columns are the terminals.
    pub fn evaluate(&self, data: &Matrix) -> Result<ConstructedColumn> {
        if self.max_feature() >= data.cols() {
            return Err(Error::ShapeMismatch {
                expected: self.max_feature() + 1,
                found: data.cols(),
            });
        }
        let mut values: Vec<f64> = (0..data.rows()).map(|i| self.eval_row(data.row(i))).collect();
        let bad = values.iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            let finite = values.iter().copied().filter(|v| v.is_finite());
            let lo = finite.clone().fold(f64::INFINITY, f64::min);
            let hi = finite.fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
            for v in &mut values {
                if *v == f64::INFINITY {
                    *v = hi;
                } else if !v.is_finite() {
                    *v = lo;
                }
            }
        }
        Ok(ConstructedColumn { values, clamped: bad })
    }

    /// Text form with terminal `fN` replaced by `names[N]`.
    pub fn to_named(&self, names: &[&str]) -> String {
        match self {
            Expr::Feature(j) => names.get(*j).map_or_else(|| format!("f{j}"), |n| (*n).to_owned()),
            Expr::Unary(op, a) => format!("({} {})", op.symbol(), a.to_named(names)),
            Expr::Binary(op, a, b) => format!("({} {} {})", op.symbol(), a.to_named(names), b.to_named(names)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Feature(j) => write!(f, "f{j}"),
            Expr::Unary(op, a) => write!(f, "({} {a})", op.symbol()),
            Expr::Binary(op, a, b) => write!(f, "({} {a} {b})", op.symbol()),
        }
    }
}

struct Parser<'a> {
    tokens: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            if c == '(' || c == ')' || c.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push((s, &text[s..i]));
                }
                if !c.is_whitespace() {
                    tokens.push((i, &text[i..i + 1]));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            tokens.push((s, &text[s..]));
        }
        Parser { tokens, pos: 0 }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let offset = self.tokens.get(self.pos).map_or_else(
            || self.tokens.last().map_or(0, |(o, t)| o + t.len()),
            |(o, _)| *o,
        );
        Err(Error::Parse {
            offset,
            message: message.into(),
        })
    }

    fn next(&mut self) -> Option<&'a str> {
        let t = self.tokens.get(self.pos).map(|(_, t)| *t);
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        match self.tokens.get(self.pos).map(|(_, t)| *t) {
            None => self.error("unexpected end of expression"),
            Some("(") => {
                self.pos += 1;
                let head = match self.next() {
                    Some(h) => h,
                    None => return self.error("missing operator"),
                };
                let e = match head {
                    "sin" => Expr::unary(UnaryOp::Sin, self.expr()?),
                    "cos" => Expr::unary(UnaryOp::Cos, self.expr()?),
                    "+" | "-" | "*" => {
                        let op = match head {
                            "+" => BinaryOp::Add,
                            "-" => BinaryOp::Sub,
                            _ => BinaryOp::Mul,
                        };
                        let a = self.expr()?;
                        let b = self.expr()?;
                        Expr::binary(op, a, b)
                    }
                    other => {
                        self.pos -= 1;
                        return self.error(format!("unknown operator `{other}`"));
                    }
                };
                match self.next() {
                    Some(")") => Ok(e),
                    _ => {
                        self.pos -= 1;
                        self.error("expected `)`")
                    }
                }
            }
            Some(tok) => {
                let idx = tok.strip_prefix('f').and_then(|d| d.parse::<usize>().ok());
                match idx {
                    Some(j) => {
                        self.pos += 1;
                        Ok(Expr::Feature(j))
                    }
                    None => self.error(format!("expected terminal `fN`, found `{tok}`")),
                }
            }
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser::new(s);
        let e = p.expr()?;
        if p.pos < p.tokens.len() {
            return p.error("trailing input");
        }
        Ok(e)
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}
