//! Accurate projection of expression-backed source data.
//!
//! Benchmark sources are sums of products of one-variable factors with
//! weak endpoint singularities, e.g. x²·t(t−1)/log t. Tensor Gauss rules
//! converge slowly on those, so the expression is split into product
//! terms, each one-variable factor is projected with a graded 1D rule,
//! and the term's coefficients are the outer product of the factor
//! projections. Terms that do not separate fall back to the tensor rule.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::basis::{project_1d_graded, project_2d, project_3d, BasisConfig};
use crate::error::Result;
use crate::expr::{Env, Expr, Func, Var};
use crate::problem::Field;

/// sign · Π num / Π den
#[derive(Debug, Clone)]
struct Term {
    sign: f64,
    num: Vec<Expr>,
    den: Vec<Expr>,
}

impl Term {
    fn atom(e: &Expr) -> Self {
        Self {
            sign: 1.0,
            num: vec![e.clone()],
            den: Vec::new(),
        }
    }

    fn into_expr(self) -> Expr {
        let num = product(self.num);
        let e = if self.den.is_empty() {
            num
        } else {
            Expr::Div(Box::new(num), Box::new(product(self.den)))
        };
        if self.sign < 0.0 {
            Expr::Neg(Box::new(e))
        } else {
            e
        }
    }
}

fn product(mut factors: Vec<Expr>) -> Expr {
    if factors.is_empty() {
        return Expr::Num(1.0);
    }
    let first = factors.remove(0);
    factors
        .into_iter()
        .fold(first, |acc, f| Expr::Mul(Box::new(acc), Box::new(f)))
}

const MAX_TERMS: usize = 256;

fn negate(mut terms: Vec<Term>) -> Vec<Term> {
    for t in &mut terms {
        t.sign = -t.sign;
    }
    terms
}

fn contains_log(e: &Expr) -> bool {
    match e {
        Expr::Call(Func::Log, _) => true,
        Expr::Num(_) | Expr::Var(_) => false,
        Expr::Neg(a) | Expr::Call(_, a) => contains_log(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
            contains_log(a) || contains_log(b)
        }
    }
}

/// Expands into product terms. Sums are split only when they involve more
/// than one variable. Under a logarithmic denominator, sums touching its
/// variables stay whole so that the (v−1)/log v guard keeps its pattern.
fn expand(e: &Expr) -> Vec<Term> {
    expand_protected(e, &[])
}

fn expand_protected(e: &Expr, protect: &[Var]) -> Vec<Term> {
    let vars = e.free_vars();
    let split_sum = vars.len() > 1 && !vars.iter().any(|v| protect.contains(v));
    match e {
        Expr::Add(a, b) if split_sum => {
            let mut t = expand_protected(a, protect);
            t.extend(expand_protected(b, protect));
            t
        }
        Expr::Sub(a, b) if split_sum => {
            let mut t = expand_protected(a, protect);
            t.extend(negate(expand_protected(b, protect)));
            t
        }
        Expr::Neg(a) => negate(expand_protected(a, protect)),
        Expr::Mul(a, b) => {
            let (ta, tb) = (expand_protected(a, protect), expand_protected(b, protect));
            if ta.len() * tb.len() > MAX_TERMS {
                return vec![Term::atom(e)];
            }
            let mut out = Vec::with_capacity(ta.len() * tb.len());
            for x in &ta {
                for y in &tb {
                    let mut num = x.num.clone();
                    num.extend(y.num.iter().cloned());
                    let mut den = x.den.clone();
                    den.extend(y.den.iter().cloned());
                    out.push(Term {
                        sign: x.sign * y.sign,
                        num,
                        den,
                    });
                }
            }
            out
        }
        Expr::Div(a, b) => {
            let mut guarded = protect.to_vec();
            if contains_log(b) {
                guarded.extend(b.free_vars());
            }
            let mut terms = expand_protected(a, &guarded);
            for t in &mut terms {
                t.den.push((**b).clone());
            }
            terms
        }
        _ => vec![Term::atom(e)],
    }
}

/// Per-variable factors of a separable term, plus its constant factor.
struct Separated {
    constant: Expr,
    factors: BTreeMap<Var, Expr>,
}

fn separate(term: &Term) -> Option<Separated> {
    let mut num: BTreeMap<Option<Var>, Vec<Expr>> = BTreeMap::new();
    let mut den: BTreeMap<Option<Var>, Vec<Expr>> = BTreeMap::new();
    for (src, dst) in [(&term.num, &mut num), (&term.den, &mut den)] {
        for f in src {
            let vars = f.free_vars();
            if vars.len() > 1 {
                return None;
            }
            dst.entry(vars.first().copied()).or_default().push(f.clone());
        }
    }
    let mut keys: Vec<Option<Var>> = num.keys().chain(den.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    let mut constant = Expr::Num(term.sign);
    let mut factors = BTreeMap::new();
    for k in keys {
        let t = Term {
            sign: 1.0,
            num: num.remove(&k).unwrap_or_default(),
            den: den.remove(&k).unwrap_or_default(),
        };
        match k {
            None => constant = Expr::Mul(Box::new(constant), Box::new(t.into_expr())),
            Some(v) => {
                factors.insert(v, t.into_expr());
            }
        }
    }
    Some(Separated { constant, factors })
}

fn project_factor(
    factor: Option<&Expr>,
    var: Var,
    cfg: &BasisConfig,
    nq: usize,
) -> Result<DVector<f64>> {
    match factor {
        None => project_1d_graded(|_| Ok(1.0), cfg, nq),
        Some(e) => project_1d_graded(|v| Ok(e.eval(&Env::new().with(var, v))?), cfg, nq),
    }
}

/// Splits `e` into separable terms and the sum of the remaining ones.
fn split(e: &Expr) -> (Vec<Separated>, Option<Expr>) {
    let mut sep = Vec::new();
    let mut rest: Option<Expr> = None;
    for term in expand(e) {
        match separate(&term) {
            Some(s) => sep.push(s),
            None => {
                let te = term.into_expr();
                rest = Some(match rest {
                    None => te,
                    Some(r) => Expr::Add(Box::new(r), Box::new(te)),
                });
            }
        }
    }
    (sep, rest)
}

/// ℱ for data f(x, t) on the given bases (see [`crate::basis::project_2d`]).
pub fn project_source_2d(
    field: &Field,
    cfg_t: &BasisConfig,
    cfg_x: &BasisConfig,
    nq: usize,
) -> Result<DMatrix<f64>> {
    let Some(expr) = field.expr() else {
        return project_2d(|x, t| field.eval(&[x, t]), cfg_t, cfg_x, nq);
    };
    let (sep, rest) = split(expr);
    let mut out = DMatrix::zeros(cfg_t.size(), cfg_x.size());
    for s in sep {
        let c = s.constant.eval(&Env::new())?;
        if c == 0.0 {
            continue;
        }
        let vt = project_factor(s.factors.get(&Var::T), Var::T, cfg_t, nq)?;
        let vx = project_factor(s.factors.get(&Var::X), Var::X, cfg_x, nq)?;
        out += vt * vx.transpose() * c;
    }
    if let Some(r) = rest {
        out += project_2d(
            |x, t| Ok(r.eval(&Env::new().with(Var::X, x).with(Var::T, t))?),
            cfg_t,
            cfg_x,
            nq,
        )?;
    }
    Ok(out)
}

/// ℱ for data f(x, η, t) (see [`crate::basis::project_3d`]).
pub fn project_source_3d(
    field: &Field,
    cfg_t: &BasisConfig,
    cfg_x: &BasisConfig,
    cfg_eta: &BasisConfig,
    nq: usize,
) -> Result<DMatrix<f64>> {
    let Some(expr) = field.expr() else {
        return project_3d(|x, e, t| field.eval(&[x, e, t]), cfg_t, cfg_x, cfg_eta, nq);
    };
    let (sep, rest) = split(expr);
    let ne = cfg_eta.size();
    let mut out = DMatrix::zeros(cfg_t.size(), cfg_x.size() * ne);
    for s in sep {
        let c = s.constant.eval(&Env::new())?;
        if c == 0.0 {
            continue;
        }
        let vt = project_factor(s.factors.get(&Var::T), Var::T, cfg_t, nq)?;
        let vx = project_factor(s.factors.get(&Var::X), Var::X, cfg_x, nq)?;
        let ve = project_factor(s.factors.get(&Var::Eta), Var::Eta, cfg_eta, nq)?;
        out += vt * vx.kronecker(&ve).transpose() * c;
    }
    if let Some(r) = rest {
        out += project_3d(
            |x, e, t| {
                Ok(r.eval(&Env::new().with(Var::X, x).with(Var::Eta, e).with(Var::T, t))?)
            },
            cfg_t,
            cfg_x,
            cfg_eta,
            nq,
        )?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::default_nq;

    fn field2(src: &str) -> Field {
        Field::parse(src, &[&[Var::X], &[Var::T]]).unwrap()
    }

    #[test]
    fn splits_products_and_keeps_guards() {
        let e = Expr::parse("2*x^2*t*(t - 1)/log(t) + x^2*t^2 - t^2*(x - 1)/log(x)").unwrap();
        let (sep, rest) = split(&e);
        assert_eq!(sep.len(), 3);
        assert!(rest.is_none());
        let f = &sep[0].factors[&Var::T];
        assert_eq!(f.eval(&Env::new().with(Var::T, 1.0)).unwrap(), 1.0);
        let e = Expr::parse("2*(x + eta)*(t - 1)/log(t)").unwrap();
        let (sep, rest) = split(&e);
        assert_eq!(sep.len(), 2);
        assert!(rest.is_none());
        let e = Expr::parse("(x + t - 1)/log(t)").unwrap();
        let (sep, rest) = split(&e);
        assert!(sep.is_empty());
        assert!(rest.is_some());
        let e = Expr::parse("sqrt(x*t) + x").unwrap();
        let (sep, rest) = split(&e);
        assert_eq!(sep.len(), 1);
        assert!(rest.is_some());
    }

    #[test]
    fn agrees_with_tensor_rule_on_smooth_data() {
        let cfg = BasisConfig::global(4);
        let f = field2("exp(x)*(1 + t^2) - x*t/3 + sqrt(x*t + 1)");
        let a = project_source_2d(&f, &cfg, &cfg, 32).unwrap();
        let b = project_2d(|x, t| f.eval(&[x, t]), &cfg, &cfg, 32).unwrap();
        assert!((a - b).amax() < 1e-14);
    }

    #[test]
    fn resolves_log_endpoint() {
        // ⟨(t−1)/log t, 1⟩ = log 2
        let cfg = BasisConfig::global(3);
        let f = field2("(t - 1)/log(t)");
        let a = project_source_2d(&f, &cfg, &cfg, default_nq(&cfg)).unwrap();
        assert!((a[(0, 0)] - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(a[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn three_d_matches_tensor_rule() {
        let cfg = BasisConfig::global(3);
        let f = Field::parse(
            "1 + x*eta + eta*t + t*x + (x + eta)*exp(t)",
            &[&[Var::X], &[Var::Eta], &[Var::T]],
        )
        .unwrap();
        let a = project_source_3d(&f, &cfg, &cfg, &cfg, 16).unwrap();
        let b = project_3d(|x, e, t| f.eval(&[x, e, t]), &cfg, &cfg, &cfg, 16).unwrap();
        assert!((a - b).amax() < 1e-14);
    }
}
