//! One-variable expression parsing and jet evaluation.
//!
//! Grammar (whitespace-insensitive, single free variable `x`):
//!
//! ```text
//! expr    := term  (('+' | '-') term)*          left associative
//! term    := unary (('*' | '/') unary)*         left associative
//! unary   := '-' unary | power
//! power   := primary ('^' signed-number)*       exponent must be a literal
//! primary := number | 'x' | ident '(' expr ')' | '(' expr ')'
//! ident   := sin | cos | tan | atan | exp | ln | sqrt | abs
//! ```
//!
//! Precedence is `^` > unary `-` > `*` `/` > `+` `-`. Evaluating an
//! expression as a [`TaylorJet`] propagates derivatives up to the requested
//! degree; [`ProblemSpec::bundle_at_root`] turns that into the plain
//! derivatives `g'(l) .. g^(m)(l)` required by the method constructions.

use std::fmt;
use std::sync::Mutex;

use thiserror::Error;

use crate::jet::{JetError, TaylorJet};
use crate::series::{DerivativeBundle, SeriesError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("jet evaluation failed at {point}: {source}")]
    Jet {
        point: f64,
        #[source]
        source: JetError,
    },
    #[error("{root} is not a root: |g({root})| = {residual:.3e} exceeds the sanity bound")]
    NotARoot { root: f64, residual: f64 },
    #[error("no root supplied but derivatives at the root were requested")]
    MissingRoot,
    #[error("explicit derivative list has {available} entries, {needed} needed")]
    NotEnoughExplicitDerivatives { needed: usize, available: usize },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Parsed abstract syntax of a one-variable expression.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Number(f64),
    Var,
    Neg(Box<ExprNode>),
    Binary(BinOp, Box<ExprNode>, Box<ExprNode>),
    Call(Func, Box<ExprNode>),
    /// `base ^ exponent` with a constant exponent.
    Pow(Box<ExprNode>, f64),
}

// ---------------------------------------------------------------------------
// Parsing

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, offset: usize, message: impl Into<String>) -> ExprError {
        ExprError::Syntax { offset, message: message.into() }
    }

    fn expr(&mut self) -> Result<ExprNode, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            let op = match c {
                b'+' => BinOp::Add,
                b'-' => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = ExprNode::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ExprNode, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek() {
            let op = match c {
                b'*' => BinOp::Mul,
                b'/' => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = ExprNode::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ExprNode, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(ExprNode::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprNode, ExprError> {
        let mut base = self.primary()?;
        while self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.signed_number()?;
            base = ExprNode::Pow(Box::new(base), exp);
        }
        Ok(base)
    }

    fn signed_number(&mut self) -> Result<f64, ExprError> {
        let neg = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let n = self.number()?;
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.err(self.pos, "expected a constant exponent after `^`")),
        }
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == b'.')
        {
            self.pos += 1;
        }
        // optional exponent part: 1e-3, 2.5E4
        if self.src.get(self.pos).is_some_and(|c| *c == b'e' || *c == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.src.get(self.pos).is_some_and(|c| *c == b'+' || *c == b'-') {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                while self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark; // `e` belonged to something else
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map_err(|_| self.err(start, format!("invalid number `{text}`")))
    }

    fn primary(&mut self) -> Result<ExprNode, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err(self.pos, "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(ExprNode::Number(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if name == "x" {
                    return Ok(ExprNode::Var);
                }
                if name == "pi" {
                    return Ok(ExprNode::Number(std::f64::consts::PI));
                }
                let func = Func::from_name(name).ok_or_else(|| ExprError::UnknownIdentifier {
                    name: name.to_string(),
                    offset: start,
                })?;
                if self.peek() != Some(b'(') {
                    return Err(self.err(self.pos, format!("expected `(` after `{name}`")));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err(self.pos, "expected `)`"));
                }
                self.pos += 1;
                Ok(ExprNode::Call(func, Box::new(arg)))
            }
            Some(c) => Err(self.err(self.pos, format!("unexpected character `{}`", c as char))),
            None => Err(self.err(self.pos, "unexpected end of input")),
        }
    }
}

/// Parse an expression in the single free variable `x`.
pub fn parse(text: &str) -> Result<ExprNode, ExprError> {
    if text.trim().is_empty() {
        return Err(ExprError::Syntax { offset: 0, message: "empty expression".into() });
    }
    let mut p = Parser::new(text);
    let node = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err(p.pos, "trailing input"));
    }
    Ok(node)
}

// ---------------------------------------------------------------------------
// Printing (canonical form; parse . print . parse is a fixed point)

impl ExprNode {
    fn precedence(&self) -> u8 {
        match self {
            ExprNode::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            ExprNode::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            ExprNode::Neg(_) => 3,
            ExprNode::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < parent;
        if parens {
            write!(f, "(")?;
        }
        match self {
            ExprNode::Number(v) => write!(f, "{v}")?,
            ExprNode::Var => write!(f, "x")?,
            ExprNode::Neg(inner) => {
                write!(f, "-")?;
                inner.fmt_prec(f, prec)?;
            }
            ExprNode::Binary(op, lhs, rhs) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                lhs.fmt_prec(f, prec)?;
                write!(f, "{sym}")?;
                // left associative: the right child needs parens at equal precedence
                rhs.fmt_prec(f, prec + 1)?;
            }
            ExprNode::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            ExprNode::Pow(base, exp) => {
                base.fmt_prec(f, prec + 1)?;
                if *exp < 0.0 {
                    write!(f, "^-{}", -exp)?;
                } else {
                    write!(f, "^{exp}")?;
                }
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

// ---------------------------------------------------------------------------
// Evaluation

impl ExprNode {
    /// Plain scalar evaluation. Domain violations surface as NaN/inf, which
    /// the iteration driver reports as numerical failure.
    pub fn eval_scalar(&self, x: f64) -> f64 {
        match self {
            ExprNode::Number(v) => *v,
            ExprNode::Var => x,
            ExprNode::Neg(inner) => -inner.eval_scalar(x),
            ExprNode::Binary(op, lhs, rhs) => {
                let a = lhs.eval_scalar(x);
                let b = rhs.eval_scalar(x);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            ExprNode::Call(func, arg) => {
                let v = arg.eval_scalar(x);
                match func {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tan => v.tan(),
                    Func::Atan => v.atan(),
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln(),
                    Func::Sqrt => v.sqrt(),
                    Func::Abs => v.abs(),
                }
            }
            ExprNode::Pow(base, exp) => {
                let b = base.eval_scalar(x);
                if exp.fract() == 0.0 && exp.abs() < 1e15 {
                    b.powi(*exp as i32)
                } else {
                    b.powf(*exp)
                }
            }
        }
    }

    /// Evaluate as a truncated Taylor expansion at `point`, so that
    /// `coeffs[k] = g^(k)(point)/k!`.
    pub fn eval_jet(&self, point: f64, degree: usize) -> Result<TaylorJet, ExprError> {
        self.jet_inner(point, degree)
            .map_err(|source| ExprError::Jet { point, source })
    }

    fn jet_inner(&self, point: f64, degree: usize) -> Result<TaylorJet, JetError> {
        match self {
            ExprNode::Number(v) => Ok(TaylorJet::constant(point, *v, degree)),
            ExprNode::Var => Ok(TaylorJet::variable(point, degree)),
            ExprNode::Neg(inner) => Ok(inner.jet_inner(point, degree)?.neg()),
            ExprNode::Binary(op, lhs, rhs) => {
                let a = lhs.jet_inner(point, degree)?;
                let b = rhs.jet_inner(point, degree)?;
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::Div => a.div(&b),
                }
            }
            ExprNode::Call(func, arg) => {
                let u = arg.jet_inner(point, degree)?;
                match func {
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Tan => u.tan(),
                    Func::Atan => u.atan(),
                    Func::Exp => u.exp(),
                    Func::Ln => u.ln(),
                    Func::Sqrt => u.sqrt(),
                    Func::Abs => u.abs(),
                }
            }
            ExprNode::Pow(base, exp) => {
                let b = base.jet_inner(point, degree)?;
                if exp.fract() == 0.0 && exp.abs() < 1e15 {
                    b.powi(*exp as i64)
                } else {
                    b.powf(*exp)
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Problem specification

/// Where the derivatives at the root come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DerivativeSource {
    /// Differentiate the expression at the root via jet propagation.
    AutoJet,
    /// User-supplied plain derivatives `g'(l), g''(l), ...`.
    Explicit(Vec<f64>),
}

/// A root-finding problem: the function `g`, optionally the known root `l`,
/// and the source of the derivatives at `l`.
///
/// Derivatives computed by jet propagation are cached, so repeated method
/// constructions never re-differentiate the expression.
#[derive(Debug)]
pub struct ProblemSpec {
    expr: ExprNode,
    root: Option<f64>,
    source: DerivativeSource,
    // plain derivatives computed so far (auto-jet source only)
    cache: Mutex<Vec<f64>>,
}

/// Root-sanity bound: `|g(l)| <= 1e-9 * max(1, |l|)`.
const ROOT_SANITY: f64 = 1e-9;

impl ProblemSpec {
    pub fn new(expr: ExprNode, root: Option<f64>, source: DerivativeSource) -> Self {
        Self { expr, root, source, cache: Mutex::new(Vec::new()) }
    }

    pub fn from_text(text: &str, root: Option<f64>) -> Result<Self, ExprError> {
        Ok(Self::new(parse(text)?, root, DerivativeSource::AutoJet))
    }

    pub fn expr(&self) -> &ExprNode {
        &self.expr
    }

    pub fn root(&self) -> Option<f64> {
        self.root
    }

    pub fn g(&self, x: f64) -> f64 {
        self.expr.eval_scalar(x)
    }

    pub fn jet(&self, point: f64, degree: usize) -> Result<TaylorJet, ExprError> {
        self.expr.eval_jet(point, degree)
    }

    /// Plain derivatives `g'(l) .. g^(m)(l)` at the root.
    pub fn bundle_at_root(&self, m: usize) -> Result<DerivativeBundle, ExprError> {
        let root = self.root.ok_or(ExprError::MissingRoot)?;
        match &self.source {
            DerivativeSource::Explicit(list) => {
                if list.len() < m {
                    return Err(ExprError::NotEnoughExplicitDerivatives {
                        needed: m,
                        available: list.len(),
                    });
                }
                Ok(DerivativeBundle::new(root, list[..m].to_vec())?)
            }
            DerivativeSource::AutoJet => {
                {
                    let cache = self.cache.lock().unwrap();
                    if cache.len() >= m {
                        return Ok(DerivativeBundle::new(root, cache[..m].to_vec())?);
                    }
                }
                let jet = self.expr.eval_jet(root, m)?;
                let residual = jet.value().abs();
                if residual > ROOT_SANITY * root.abs().max(1.0) {
                    return Err(ExprError::NotARoot { root, residual });
                }
                let derivs: Vec<f64> = (1..=m).map(|k| jet.derivative(k)).collect();
                let mut cache = self.cache.lock().unwrap();
                if derivs.len() > cache.len() {
                    *cache = derivs.clone();
                }
                Ok(DerivativeBundle::new(root, derivs)?)
            }
        }
    }
}
