//! A small arithmetic expression language for weights, sources and
//! initial/boundary data.
//!
//! Grammar, loosest to tightest: `+ -` (left), `* /` (left), unary minus,
//! `^` (right, exponent may carry its own unary minus), atoms. Atoms are
//! numbers, variables and the calls `log`, `sqrt`, `exp`, `gamma`.
//!
//! Evaluation of `…·(v−1)·…/log(v)` is guarded: at |v−1| ≤ 1e-12 the
//! factor (v−1)/log v takes its limit 1, and at 0 ≤ v ≤ 1e-300 its limit 0.
//! A 0/0 that escapes the syntactic guard (both magnitudes below 1e-10)
//! is resolved by a Richardson-extrapolated one-sided limit.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::special::gamma;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier {name:?} at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable {0} is not bound")]
    Unbound(Var),
    #[error("{0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Eta,
    T,
    Alpha,
    Beta,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::X, Var::Eta, Var::T, Var::Alpha, Var::Beta];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Eta => "eta",
            Var::T => "t",
            Var::Alpha => "alpha",
            Var::Beta => "beta",
        }
    }

    fn lookup(name: &str) -> Option<Var> {
        Some(match name {
            "x" => Var::X,
            "eta" | "η" | "y" => Var::Eta,
            "t" => Var::T,
            "alpha" | "α" | "a" => Var::Alpha,
            "beta" | "β" | "b" => Var::Beta,
            _ => return None,
        })
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Sqrt,
    Exp,
    Gamma,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Gamma => "gamma",
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "gamma" | "Γ" => Func::Gamma,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> Result<f64, ExprError> {
        match self {
            Func::Log if v <= 0.0 => Err(ExprError::Domain(format!("log of non-positive value {v}"))),
            Func::Log => Ok(v.ln()),
            Func::Sqrt if v < 0.0 => Err(ExprError::Domain(format!("sqrt of negative value {v}"))),
            Func::Sqrt => Ok(v.sqrt()),
            Func::Exp => Ok(v.exp()),
            Func::Gamma => {
                let g = gamma(v);
                if g.is_finite() {
                    Ok(g)
                } else {
                    Err(ExprError::Domain(format!("gamma has a pole at {v}")))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Env {
    values: [Option<f64>; 5],
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        self.set(var, value);
        self
    }

    pub fn set(&mut self, var: Var, value: f64) {
        self.values[var.index()] = Some(value);
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.values[var.index()]
    }
}

const GUARD_ONE: f64 = 1e-12;
const GUARD_ZERO: f64 = 1e-300;
const FALLBACK_TINY: f64 = 1e-10;
const FALLBACK_STEP: f64 = 1e-4;

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        Parser::new(src)?.parse_all()
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    /// Sorted, deduplicated free variables.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn eval(&self, env: &Env) -> Result<f64, ExprError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(v) => env.get(*v).ok_or(ExprError::Unbound(*v)),
            Expr::Neg(e) => Ok(-e.eval(env)?),
            Expr::Add(a, b) => Ok(a.eval(env)? + b.eval(env)?),
            Expr::Sub(a, b) => Ok(a.eval(env)? - b.eval(env)?),
            Expr::Mul(a, b) => Ok(a.eval(env)? * b.eval(env)?),
            Expr::Div(a, b) => self.eval_div(a, b, env),
            Expr::Pow(a, b) => {
                let (base, exp) = (a.eval(env)?, b.eval(env)?);
                let v = base.powf(exp);
                if v.is_nan() {
                    return Err(ExprError::Domain(format!("{base}^{exp} is undefined")));
                }
                if v.is_infinite() && base == 0.0 {
                    return Err(ExprError::DivisionByZero);
                }
                Ok(v)
            }
            Expr::Call(f, e) => f.apply(e.eval(env)?),
        }
    }

    fn eval_div(&self, num: &Expr, den: &Expr, env: &Env) -> Result<f64, ExprError> {
        if let Some(v) = self.guarded_quotient(num, den, env)? {
            return Ok(v);
        }
        let n = num.eval(env)?;
        let d = den.eval(env)?;
        if n.abs() < FALLBACK_TINY && d.abs() < FALLBACK_TINY {
            if let Some(v) = richardson_limit(self, env) {
                return Ok(v);
            }
        }
        if d == 0.0 {
            return Err(ExprError::DivisionByZero);
        }
        Ok(n / d)
    }

    /// Handles `(…·(v−1)·…)/log(v)` near v = 1 and v = 0.
    fn guarded_quotient(&self, num: &Expr, den: &Expr, env: &Env) -> Result<Option<f64>, ExprError> {
        let Expr::Call(Func::Log, arg) = den else {
            return Ok(None);
        };
        let mut factors = Vec::new();
        flatten_product(num, &mut factors);
        let pos = factors.iter().position(|f| {
            matches!(f, Expr::Sub(a, b) if **a == **arg && **b == Expr::Num(1.0))
        });
        let Some(pos) = pos else {
            return Ok(None);
        };
        let v = arg.eval(env)?;
        let limit = if (v - 1.0).abs() <= GUARD_ONE {
            1.0
        } else if (0.0..=GUARD_ZERO).contains(&v) {
            0.0
        } else {
            return Ok(None);
        };
        let mut rest = 1.0;
        for (i, f) in factors.iter().enumerate() {
            if i != pos {
                rest *= f.eval(env)?;
            }
        }
        Ok(Some(rest * limit))
    }
}

fn flatten_product<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Mul(a, b) => {
            flatten_product(a, out);
            flatten_product(b, out);
        }
        other => out.push(other),
    }
}

/// One-sided limit of a 0/0 quotient: shift every bound free variable by
/// ±h and ±2h, then extrapolate linearly to the point.
fn richardson_limit(q: &Expr, env: &Env) -> Option<f64> {
    let vars = q.free_vars();
    for sign in [1.0, -1.0] {
        let at = |h: f64| -> Option<f64> {
            let mut shifted = *env;
            for &v in &vars {
                shifted.set(v, env.get(v)? + sign * h);
            }
            let Expr::Div(n, d) = q else { return None };
            let (nv, dv) = (n.eval(&shifted).ok()?, d.eval(&shifted).ok()?);
            if dv == 0.0 {
                return None;
            }
            let r = nv / dv;
            r.is_finite().then_some(r)
        };
        if let (Some(q1), Some(q2)) = (at(FALLBACK_STEP), at(2.0 * FALLBACK_STEP)) {
            return Some(2.0 * q1 - q2);
        }
    }
    None
}

impl FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

// ---------------------------------------------------------------- printing

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Num(v) if v.is_sign_negative() => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, precedence(e) < 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let (op, p) = match self {
                    Expr::Add(..) => (" + ", 1),
                    Expr::Sub(..) => (" - ", 1),
                    Expr::Mul(..) => ("*", 2),
                    _ => ("/", 2),
                };
                write_child(f, a, precedence(a) < p)?;
                f.write_str(op)?;
                write_child(f, b, precedence(b) <= p)
            }
            Expr::Pow(a, b) => {
                write_child(f, a, precedence(a) <= 4)?;
                f.write_str("^")?;
                write_child(f, b, precedence(b) < 3)
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

// ----------------------------------------------------------------- parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(off, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
        } else if c.is_ascii_digit() || c == '.' {
            let mut end = off;
            let bytes = src.as_bytes();
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &src[off..end];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: off,
                message: format!("malformed number {text:?}"),
            })?;
            out.push((Tok::Num(v), off));
            while it.peek().is_some_and(|&(o, _)| o < end) {
                it.next();
            }
        } else if c.is_alphabetic() || c == '_' {
            let mut name = String::new();
            while let Some(&(_, c)) = it.peek() {
                if c.is_alphanumeric() || c == '_' {
                    name.push(c);
                    it.next();
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(name), off));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '×' => Tok::Op('*'),
                '÷' => Tok::Op('/'),
                '−' => Tok::Op('-'),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(ExprError::Syntax {
                        offset: off,
                        message: format!("unexpected character {c:?}"),
                    })
                }
            };
            out.push((tok, off));
            it.next();
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

impl Parser {
    fn new(src: &str) -> Result<Self, ExprError> {
        Ok(Self {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        let e = self.sum()?;
        if *self.peek() != Tok::End {
            return self.error("unexpected trailing input");
        }
        Ok(e)
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let off = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.sum()?;
                if self.bump() != Tok::RParen {
                    return Err(ExprError::Syntax {
                        offset: off,
                        message: "unbalanced parenthesis".into(),
                    });
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let Some(func) = Func::lookup(&name) else {
                        return Err(ExprError::UnknownIdentifier { name, offset: off });
                    };
                    self.bump();
                    let arg = self.sum()?;
                    if *self.peek() != Tok::RParen {
                        return self.error(format!("expected ')' to close {}(", func.name()));
                    }
                    self.bump();
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                Var::lookup(&name)
                    .map(Expr::Var)
                    .ok_or(ExprError::UnknownIdentifier { name, offset: off })
            }
            Tok::End => Err(ExprError::Syntax {
                offset: off,
                message: "unexpected end of input".into(),
            }),
            tok => Err(ExprError::Syntax {
                offset: off,
                message: format!("unexpected token {tok:?}"),
            }),
        }
    }
}
