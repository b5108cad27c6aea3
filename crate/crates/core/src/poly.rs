//! Shifted Legendre polynomials on [0, 1] and Gauss–Legendre rules.
//!
//! Polynomials are kept in two forms. The monomial form feeds the exact
//! fractional inner products; evaluation goes through the three-term
//! recurrence. Monomial coefficients grow like C(m,k)C(m+k,k), so the
//! expanded form is only trusted up to degree [`MAX_MONOMIAL_DEGREE`].

use crate::error::{Error, Result};

/// Above this degree the monomial coefficients lose more than ~6 digits
/// to cancellation when evaluated on [0, 1].
pub const MAX_MONOMIAL_DEGREE: usize = 24;

const ROOT_TOL: f64 = 1e-14;
const ROOT_MAX_ITER: usize = 100;

/// Dense polynomial, `coeffs[k]` multiplies t^k.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialPoly {
    pub coeffs: Vec<f64>,
}

impl MonomialPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}

/// Monomial coefficients of the degree-`m` shifted Legendre polynomial,
/// normalized so that p_m(1) = 1.
///
/// Uses p_m(t) = Σ_k (−1)^{m+k} C(m,k) C(m+k,k) t^k, which is exact in
/// double precision up to [`MAX_MONOMIAL_DEGREE`].
pub fn shifted_legendre_coeffs(m: usize) -> MonomialPoly {
    let mut coeffs = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let sign = if (m + k).is_multiple_of(2) { 1.0 } else { -1.0 };
        coeffs.push(sign * binomial(m, k) * binomial(m + k, k));
    }
    MonomialPoly::new(coeffs)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Legendre P_m(x) and P_m'(x) on [−1, 1] by recurrence.
fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    if m == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for n in 1..m {
        let n = n as f64;
        let p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let mf = m as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint: P_m'(±1) = (±1)^{m+1} m(m+1)/2
        let s = if x > 0.0 || m % 2 == 1 { 1.0 } else { -1.0 };
        s * mf * (mf + 1.0) / 2.0
    } else {
        mf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

pub(crate) fn legendre(m: usize, x: f64) -> f64 {
    legendre_with_derivative(m, x).0
}

/// Shifted Legendre p_m(t) for t in [0, 1], by recurrence.
pub fn eval_shifted_legendre(m: usize, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain {
            what: "t",
            value: t,
            domain: "[0, 1]",
        });
    }
    Ok(legendre(m, 2.0 * t - 1.0))
}

/// Expansion of p_m' in the shifted Legendre basis:
/// p_m' = 2 Σ_{k<m, k+m odd} (2k+1) p_k. Entries are `(k, 2(2k+1))`.
pub fn legendre_derivative_expansion(m: usize) -> Vec<(usize, f64)> {
    (0..m)
        .filter(|k| (k + m) % 2 == 1)
        .map(|k| (k, 2.0 * (2 * k + 1) as f64))
        .collect()
}

/// Roots of P_m on [−1, 1] (increasing) together with the Gauss weights.
fn legendre_nodes(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let half = m.div_ceil(2);
    for i in 0..half {
        // Chebyshev-angle seed for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..ROOT_MAX_ITER {
            let (p, dp) = legendre_with_derivative(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= ROOT_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                degree: m,
                iterations: ROOT_MAX_ITER,
            });
        }
        let (_, dp) = legendre_with_derivative(m, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Mirror so the rule is exactly symmetric.
        nodes[m - 1 - i] = x;
        weights[m - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// The `m` roots of p_m in (0, 1), strictly increasing.
pub fn shifted_legendre_roots(m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Domain {
            what: "degree",
            value: 0.0,
            domain: "m >= 1",
        });
    }
    let (nodes, _) = legendre_nodes(m)?;
    Ok(nodes.into_iter().map(|x| 0.5 * (x + 1.0)).collect())
}

/// Gauss–Legendre rule mapped to [a, b].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn try_integrate<F: FnMut(f64) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(x)?;
        }
        Ok(acc)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `points`-point Gauss–Legendre rule on [a, b], exact for degree ≤ 2P−1.
pub fn gauss_legendre_rule(points: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if points == 0 {
        return Err(Error::Domain {
            what: "points",
            value: 0.0,
            domain: "P >= 1",
        });
    }
    if !(a < b) {
        return Err(Error::Domain {
            what: "interval length",
            value: b - a,
            domain: "a < b",
        });
    }
    let (tau, w) = legendre_nodes(points)?;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    Ok(QuadratureRule {
        nodes: tau.iter().map(|&x| half * x + mid).collect(),
        weights: w.iter().map(|&wi| half * wi).collect(),
        a,
        b,
    })
}
