//! Reference computations that avoid the solver's discretization: adaptive
//! Gauss–Kronrod quadrature and closed-form operator images of finite
//! power sums Σ c·x^p·η^q·t^r.
//!
//! These back the source-consistency check: applying the continuous
//! operators to an exact solution must reproduce the registered source.

use crate::error::{Error, Result};
use crate::expr::{Env, Expr, Var};
use crate::fractional::WeightFunction;
use crate::special::gamma;

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over [a, b] to an
/// absolute tolerance `tol`. The panel with the largest error estimate is
/// bisected until the summed estimate meets the tolerance, the estimate
/// reaches roundoff level, or the panel budget runs out.
pub fn adaptive_integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    Ok(adaptive_integrate_vec(|x| Ok(vec![f(x)?]), a, b, 1, tol)?[0])
}

fn gk15_vec<F: FnMut(f64) -> Result<Vec<f64>>>(
    f: &mut F,
    a: f64,
    b: f64,
    n: usize,
) -> Result<(Vec<f64>, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k: Vec<f64> = fc.iter().map(|v| GK_WEIGHTS[7] * v).collect();
    let mut g: Vec<f64> = fc.iter().map(|v| GAUSS7_WEIGHTS[3] * v).collect();
    for i in 0..7 {
        let d = h * GK_NODES[i];
        let (lo, hi) = (f(c - d)?, f(c + d)?);
        for m in 0..n {
            let s = lo[m] + hi[m];
            k[m] += GK_WEIGHTS[i] * s;
            if i % 2 == 1 {
                g[m] += GAUSS7_WEIGHTS[i / 2] * s;
            }
        }
    }
    let err = k.iter().zip(&g).fold(0.0f64, |e, (k, g)| e.max((k - g).abs())) * h;
    Ok((k.into_iter().map(|v| v * h).collect(), err))
}

const MAX_PANELS: usize = 2000;

struct Panel {
    a: f64,
    b: f64,
    val: Vec<f64>,
    err: f64,
}

fn sum_panels(panels: &[Panel], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for p in panels {
        for (o, v) in out.iter_mut().zip(&p.val) {
            *o += v;
        }
    }
    out
}

/// Vector-valued [`adaptive_integrate`]: every component of `f` shares one
/// panel set, and errors are measured in the max norm. `f` must always
/// return `n` values.
pub fn adaptive_integrate_vec<F>(mut f: F, a: f64, b: f64, n: usize, tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    if a == b {
        return Ok(vec![0.0; n]);
    }
    let (val, err) = gk15_vec(&mut f, a, b, n)?;
    let mut panels = vec![Panel { a, b, val, err }];
    let mut total_err = err;
    while panels.len() < MAX_PANELS {
        let scale = sum_panels(&panels, n).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if total_err <= tol.max(50.0 * f64::EPSILON * scale) {
            break;
        }
        let worst = (0..panels.len())
            .max_by(|&i, &j| panels[i].err.total_cmp(&panels[j].err))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            total_err -= p.err;
            panels.push(Panel { err: 0.0, ..p });
            continue;
        }
        let (lv, le) = gk15_vec(&mut f, p.a, m, n)?;
        let (rv, re) = gk15_vec(&mut f, m, p.b, n)?;
        total_err += le + re - p.err;
        panels.push(Panel { a: p.a, b: m, val: lv, err: le });
        panels.push(Panel { a: m, b: p.b, val: rv, err: re });
    }
    Ok(sum_panels(&panels, n))
}

/// c·x^px·η^pe·t^pt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coef: f64,
    pub px: f64,
    pub pe: f64,
    pub pt: f64,
}

impl PowerTerm {
    fn eval(&self, x: f64, eta: f64, t: f64) -> f64 {
        self.coef * pw(x, self.px) * pw(eta, self.pe) * pw(t, self.pt)
    }
}

fn pw(v: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        v.powf(p)
    }
}

/// Finite sum of power monomials in (x, η, t).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PowerSum {
    pub terms: Vec<PowerTerm>,
}

impl PowerSum {
    fn constant(c: f64) -> Self {
        Self {
            terms: vec![PowerTerm {
                coef: c,
                px: 0.0,
                pe: 0.0,
                pt: 0.0,
            }],
        }
    }

    fn simplify(mut self) -> Self {
        let mut out: Vec<PowerTerm> = Vec::new();
        for t in self.terms.drain(..) {
            if let Some(o) = out
                .iter_mut()
                .find(|o| o.px == t.px && o.pe == t.pe && o.pt == t.pt)
            {
                o.coef += t.coef;
            } else {
                out.push(t);
            }
        }
        out.retain(|t| t.coef != 0.0);
        Self { terms: out }
    }

    fn mul(&self, other: &PowerSum) -> PowerSum {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                terms.push(PowerTerm {
                    coef: a.coef * b.coef,
                    px: a.px + b.px,
                    pe: a.pe + b.pe,
                    pt: a.pt + b.pt,
                });
            }
        }
        PowerSum { terms }.simplify()
    }

    fn scale(mut self, s: f64) -> PowerSum {
        for t in &mut self.terms {
            t.coef *= s;
        }
        self.simplify()
    }

    fn add(mut self, other: PowerSum) -> PowerSum {
        self.terms.extend(other.terms);
        self.simplify()
    }

    /// Expands `expr` into a power sum if it is one: constants, variables
    /// x, η, t, sums, products, constant quotients, and powers of a single
    /// monomial (or non-negative integer powers of a sum).
    pub fn from_expr(expr: &Expr) -> Option<PowerSum> {
        if expr.free_vars().is_empty() {
            return expr.eval(&Env::new()).ok().map(PowerSum::constant);
        }
        match expr {
            Expr::Var(v) => {
                let mut t = PowerTerm {
                    coef: 1.0,
                    px: 0.0,
                    pe: 0.0,
                    pt: 0.0,
                };
                match v {
                    Var::X => t.px = 1.0,
                    Var::Eta => t.pe = 1.0,
                    Var::T => t.pt = 1.0,
                    _ => return None,
                }
                Some(PowerSum { terms: vec![t] })
            }
            Expr::Neg(e) => Some(Self::from_expr(e)?.scale(-1.0)),
            Expr::Add(a, b) => Some(Self::from_expr(a)?.add(Self::from_expr(b)?)),
            Expr::Sub(a, b) => Some(Self::from_expr(a)?.add(Self::from_expr(b)?.scale(-1.0))),
            Expr::Mul(a, b) => Some(Self::from_expr(a)?.mul(&Self::from_expr(b)?)),
            Expr::Div(a, b) => {
                if !b.free_vars().is_empty() {
                    return None;
                }
                let d = b.eval(&Env::new()).ok()?;
                (d != 0.0).then(|| Self::from_expr(a).map(|s| s.scale(1.0 / d)))?
            }
            Expr::Pow(a, b) => {
                if !b.free_vars().is_empty() {
                    return None;
                }
                let p = b.eval(&Env::new()).ok()?;
                let base = Self::from_expr(a)?;
                if base.terms.len() == 1 {
                    let t = base.terms[0];
                    if t.coef < 0.0 && p.fract() != 0.0 {
                        return None;
                    }
                    return Some(PowerSum {
                        terms: vec![PowerTerm {
                            coef: t.coef.powf(p),
                            px: t.px * p,
                            pe: t.pe * p,
                            pt: t.pt * p,
                        }],
                    });
                }
                if p >= 0.0 && p.fract() == 0.0 && p <= 16.0 {
                    let mut acc = PowerSum::constant(1.0);
                    for _ in 0..p as usize {
                        acc = acc.mul(&base);
                    }
                    return Some(acc);
                }
                None
            }
            Expr::Num(_) | Expr::Call(..) => None,
        }
    }

    pub fn eval(&self, x: f64, eta: f64, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(x, eta, t)).sum()
    }

    /// ∂²/∂x² (axis 0) or ∂²/∂η² (axis 1).
    pub fn second_derivative(&self, axis: usize) -> PowerSum {
        let terms = self
            .terms
            .iter()
            .filter_map(|t| {
                let p = if axis == 0 { t.px } else { t.pe };
                let c = t.coef * p * (p - 1.0);
                if c == 0.0 {
                    return None;
                }
                let mut out = *t;
                out.coef = c;
                if axis == 0 {
                    out.px -= 2.0;
                } else {
                    out.pe -= 2.0;
                }
                Some(out)
            })
            .collect();
        PowerSum { terms }.simplify()
    }
}

/// Caputo coefficient of D^α v^p: `None` when the derivative vanishes.
fn caputo_power(p: f64, alpha: f64) -> Result<Option<(f64, f64)>> {
    let n = alpha.ceil();
    if p.fract() == 0.0 && p < n {
        return Ok(None);
    }
    if p <= n - 1.0 {
        return Err(Error::Domain {
            what: "power under a Caputo derivative",
            value: p,
            domain: "integers below the order or values above ceil(order) - 1",
        });
    }
    Ok(Some((gamma(p + 1.0) / gamma(p + 1.0 - alpha), p - alpha)))
}

/// ∫ρ(α) D^α v^p dα at v, by adaptive quadrature over the order (split at 1).
pub fn distributed_power(weight: &WeightFunction, p: f64, v: f64, tol: f64) -> Result<f64> {
    let integrand = |alpha: f64| -> Result<f64> {
        Ok(match caputo_power(p, alpha)? {
            None => 0.0,
            Some((c, e)) => weight.eval(alpha)? * c * pw(v, e),
        })
    };
    let (lo, hi) = (weight.lower, weight.upper);
    if lo < 1.0 && hi > 1.0 {
        Ok(adaptive_integrate(integrand, lo, 1.0, 0.5 * tol)?
            + adaptive_integrate(integrand, 1.0, hi, 0.5 * tol)?)
    } else {
        adaptive_integrate(integrand, lo, hi, tol)
    }
}

/// Distributed-order derivative of `u` along x (axis 0), η (axis 1) or t (axis 2).
pub fn distributed_apply(
    u: &PowerSum,
    axis: usize,
    weight: &WeightFunction,
    point: (f64, f64, f64),
) -> Result<f64> {
    let (x, eta, t) = point;
    let mut acc = 0.0;
    for term in &u.terms {
        let (p, v, rest) = match axis {
            0 => (term.px, x, pw(eta, term.pe) * pw(t, term.pt)),
            1 => (term.pe, eta, pw(x, term.px) * pw(t, term.pt)),
            _ => (term.pt, t, pw(x, term.px) * pw(eta, term.pe)),
        };
        if p == 0.0 {
            continue;
        }
        acc += term.coef * rest * distributed_power(weight, p, v, 1e-14)?;
    }
    Ok(acc)
}

/// ∫₀^t (t−ξ)^{−μ} u(x, η, ξ) dξ in closed form.
pub fn abel_apply(u: &PowerSum, mu: f64, point: (f64, f64, f64)) -> Result<f64> {
    let (x, eta, t) = point;
    let mut acc = 0.0;
    for term in &u.terms {
        let r = term.pt;
        if r <= -1.0 {
            return Err(Error::DivergentIntegral(r));
        }
        let c = gamma(1.0 - mu) * gamma(r + 1.0) / gamma(r + 2.0 - mu);
        acc += term.coef * pw(x, term.px) * pw(eta, term.pe) * c * pw(t, r + 1.0 - mu);
    }
    Ok(acc)
}

/// Halton point in (lo, hi)^d; deterministic quasi-random samples.
pub fn halton_point(index: usize, dims: usize, lo: f64, hi: f64) -> Vec<f64> {
    const PRIMES: [usize; 4] = [2, 3, 5, 7];
    (0..dims)
        .map(|d| {
            let base = PRIMES[d];
            let (mut f, mut r, mut i) = (1.0, 0.0, index + 1);
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            lo + (hi - lo) * r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_singular_integrands() {
        let v = adaptive_integrate(|t| Ok(t.sqrt()), 0.0, 1.0, 1e-13).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        let v = adaptive_integrate(|t| Ok(1.0 / t.sqrt()), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-6);
        let v = adaptive_integrate(|t| Ok(t.exp()), 0.0, 2.0, 1e-14).unwrap();
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn vector_rule_matches_componentwise() {
        let v = adaptive_integrate_vec(|t| Ok(vec![t.powf(0.05), t.powf(1.5), 1.0]), 0.0, 1.0, 3, 1e-12).unwrap();
        assert!((v[0] - 1.0 / 1.05).abs() < 1e-11);
        assert!((v[1] - 0.4).abs() < 1e-14);
        assert!((v[2] - 1.0).abs() < 1e-15);
        assert_eq!(adaptive_integrate_vec(|_| Ok(vec![1.0; 2]), 0.5, 0.5, 2, 1e-9).unwrap(), vec![0.0; 2]);
    }

    #[test]
    fn power_sum_expansion() {
        let e = Expr::parse("(x + t)^2 - 2*x*t + 3*eta^0.5/2").unwrap();
        let s = PowerSum::from_expr(&e).unwrap();
        assert_eq!(s.terms.len(), 3);
        assert!((s.eval(0.3, 0.4, 0.7) - (0.09 + 0.49 + 1.5 * 0.4f64.sqrt())).abs() < 1e-15);
        assert!(PowerSum::from_expr(&Expr::parse("log(x)").unwrap()).is_none());
        assert!(PowerSum::from_expr(&Expr::parse("x/t").unwrap()).is_none());
        let d2 = PowerSum::from_expr(&Expr::parse("x^3*t").unwrap()).unwrap().second_derivative(0);
        assert_eq!(d2.terms, vec![PowerTerm { coef: 6.0, px: 1.0, pe: 0.0, pt: 1.0 }]);
    }

    #[test]
    fn distributed_time_on_square() {
        let w = WeightFunction::new("gamma(3-a)", 0.0, 1.0, |a| Ok(gamma(3.0 - a))).unwrap();
        let v = distributed_power(&w, 2.0, 0.5, 1e-14).unwrap();
        assert!((v - 0.721_347_520_444_481_7).abs() < 1e-13);
        let ws = WeightFunction::new("gamma(3-b)", 1.0, 2.0, |b| Ok(gamma(3.0 - b))).unwrap();
        let v = distributed_power(&ws, 2.0, 0.5, 1e-14).unwrap();
        assert!((v - std::f64::consts::LOG2_E).abs() < 1e-13);
        // linear functions are annihilated by orders in (1, 2)
        assert_eq!(distributed_power(&ws, 1.0, 0.5, 1e-14).unwrap(), 0.0);
        assert!(distributed_power(&ws, 0.5, 0.5, 1e-14).is_err());
    }

    #[test]
    fn abel_of_square() {
        let u = PowerSum::from_expr(&Expr::parse("2*t^2").unwrap()).unwrap();
        let v = abel_apply(&u, 0.5, (0.0, 0.0, 0.25)).unwrap();
        assert!((v - 32.0 / 15.0 * 0.25f64.powf(2.5)).abs() < 1e-15);
    }

    #[test]
    fn halton_in_range() {
        for i in 0..50 {
            let p = halton_point(i, 3, 0.1, 0.9);
            assert!(p.iter().all(|&v| v > 0.1 && v < 0.9));
        }
        assert_ne!(halton_point(0, 2, 0.0, 1.0), halton_point(1, 2, 0.0, 1.0));
    }
}
