//! Caputo calculus on the wavelet basis and the three operational matrices.
//!
//! All matrices use column action: an operator `L` is represented by `M`
//! with L Ψ ≈ M Ψ, so `M[i][j] = ⟨L ψ_i, ψ_j⟩`.
//!
//! Fractional images of basis functions are finite sums of real powers
//! of t ([`FracPolySeries`]), and inner products of powers against the
//! basis are evaluated in closed form, so the only approximation in the
//! distributed-order matrix is the Gauss rule over the order variable.
//! The fractional matrices are restricted to resolution 1.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::BasisConfig;
use crate::error::{Error, Result};
use crate::poly::{gauss_legendre_rule, shifted_legendre_coeffs, MonomialPoly};
use crate::special::{falling_gamma_ratio, gamma};

/// c·t^p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracTerm {
    pub coef: f64,
    pub exponent: f64,
}

impl FracTerm {
    pub fn is_zero(&self) -> bool {
        self.coef == 0.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.coef == 0.0 {
            0.0
        } else if self.exponent == 0.0 {
            self.coef
        } else {
            self.coef * t.powf(self.exponent)
        }
    }
}

/// Σ c_k t^{p_k} on [0, 1].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FracPolySeries {
    pub terms: Vec<FracTerm>,
}

impl FracPolySeries {
    pub fn new(terms: impl IntoIterator<Item = FracTerm>) -> Self {
        Self {
            terms: terms.into_iter().filter(|t| !t.is_zero()).collect(),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    /// Appends `scale·other`.
    pub fn add_scaled(&mut self, other: &FracPolySeries, scale: f64) {
        if scale == 0.0 {
            return;
        }
        self.terms.extend(other.terms.iter().map(|t| FracTerm {
            coef: t.coef * scale,
            exponent: t.exponent,
        }));
    }

    /// ⟨series, ψ_j⟩ in closed form.
    pub fn inner_with_basis(&self, j: usize, cfg: &BasisConfig) -> Result<f64> {
        let mut acc = 0.0;
        for term in &self.terms {
            acc += term.coef * frac_inner_product(term.exponent, j, cfg)?;
        }
        Ok(acc)
    }

    /// Coefficients of the L² projection onto the family.
    pub fn project(&self, cfg: &BasisConfig) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(cfg.size());
        for j in 0..cfg.size() {
            out[j] = self.inner_with_basis(j, cfg)?;
        }
        Ok(out)
    }
}

/// Caputo derivative of t^n of order α ≥ 0: zero when n < ⌈α⌉, otherwise
/// (Γ(n+1)/Γ(n+1−α)) t^{n−α}.
pub fn caputo_monomial(n: usize, alpha: f64) -> FracTerm {
    if (n as f64) < alpha.ceil() {
        return FracTerm {
            coef: 0.0,
            exponent: 0.0,
        };
    }
    if alpha == alpha.floor() {
        // ordinary derivative: n (n−1) ... (n−α+1)
        let k = alpha as usize;
        let coef = ((n - k + 1)..=n).fold(1.0, |acc, v| acc * v as f64);
        return FracTerm {
            coef,
            exponent: (n - k) as f64,
        };
    }
    FracTerm {
        coef: falling_gamma_ratio(n, alpha),
        exponent: n as f64 - alpha,
    }
}

/// ∫₀^t (t−ξ)^{−μ} ξ^k dξ = Γ(1−μ)Γ(k+1)/Γ(k+2−μ) · t^{k+1−μ}.
pub fn abel_monomial(k: usize, mu: f64) -> FracTerm {
    let kf = k as f64;
    FracTerm {
        coef: gamma(1.0 - mu) * gamma(kf + 1.0) / gamma(kf + 2.0 - mu),
        exponent: kf + 1.0 - mu,
    }
}

fn require_global(cfg: &BasisConfig) -> Result<()> {
    if cfg.resolution != 1 {
        return Err(Error::UnsupportedResolution(cfg.resolution));
    }
    Ok(())
}

/// Monomial form of ψ_i = √(2i+1)·p_i for a resolution-1 family.
pub fn basis_monomial(cfg: &BasisConfig, i: usize) -> Result<MonomialPoly> {
    require_global(cfg)?;
    if i >= cfg.size() {
        return Err(Error::Index(format!("basis index {i} not in 0..{}", cfg.size())));
    }
    Ok(shifted_legendre_coeffs(i).scaled(((2 * i + 1) as f64).sqrt()))
}

/// Apply a termwise map on monomials of ψ_i.
fn map_basis_monomials(
    cfg: &BasisConfig,
    i: usize,
    mut f: impl FnMut(usize) -> FracTerm,
) -> Result<FracPolySeries> {
    let poly = basis_monomial(cfg, i)?;
    Ok(FracPolySeries::new(poly.coeffs.iter().enumerate().map(
        |(k, &c)| {
            let term = f(k);
            FracTerm {
                coef: c * term.coef,
                exponent: term.exponent,
            }
        },
    )))
}

/// D^α ψ_i as a fractional power series.
pub fn caputo_basis(cfg: &BasisConfig, i: usize, alpha: f64) -> Result<FracPolySeries> {
    map_basis_monomials(cfg, i, |k| caputo_monomial(k, alpha))
}

/// ∫₀^t (t−ξ)^{−μ} ψ_i(ξ) dξ as a fractional power series.
pub fn abel_basis(cfg: &BasisConfig, i: usize, mu: f64) -> Result<FracPolySeries> {
    map_basis_monomials(cfg, i, |k| abel_monomial(k, mu))
}

/// ∫₀¹ t^p ψ_j(t) dt for p > −1, exactly.
///
/// Evaluated through ∫₀¹ t^p p_m(t) dt = Π_{k<m}(p−k) / Π_{k=1}^{m+1}(p+k),
/// which agrees with Σ_k c_{jk}/(p+k+1) over the monomial coefficients but
/// does not suffer their cancellation.
pub fn frac_inner_product(p: f64, j: usize, cfg: &BasisConfig) -> Result<f64> {
    require_global(cfg)?;
    if j >= cfg.size() {
        return Err(Error::Index(format!("basis index {j} not in 0..{}", cfg.size())));
    }
    if !(p > -1.0) {
        return Err(Error::DivergentIntegral(p));
    }
    let mut val = 1.0 / (p + 1.0);
    for k in 0..j {
        val *= (p - k as f64) / (p + k as f64 + 2.0);
    }
    Ok(((2 * j + 1) as f64).sqrt() * val)
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    IntegerDerivative {
        order: u32,
    },
    Distributed {
        lower: f64,
        upper: f64,
        points: usize,
        weight: String,
    },
    SingularKernel {
        mu: f64,
    },
}

#[derive(Debug, Clone)]
pub struct OperationalMatrix {
    pub kind: OperatorKind,
    pub data: DMatrix<f64>,
    pub cfg: BasisConfig,
}

/// Integer-order derivative matrix D^{order}; D is block diagonal with
/// H_{p,q} = 2^R √((2p−1)(2q−1)) for p > q, p+q odd (1-based).
pub fn integer_derivative_matrix(cfg: &BasisConfig, order: u32) -> Result<OperationalMatrix> {
    if order == 0 {
        return Err(Error::Config("derivative order must be at least 1".into()));
    }
    let n = cfg.count;
    let scale = 2f64.powi(cfg.resolution as i32);
    let h = DMatrix::from_fn(n, n, |r, c| {
        let (p, q) = (r + 1, c + 1);
        if p > q && (p + q) % 2 == 1 {
            scale * (((2 * p - 1) * (2 * q - 1)) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut d = DMatrix::zeros(cfg.size(), cfg.size());
    for b in 0..cfg.blocks() {
        d.view_mut((b * n, b * n), (n, n)).copy_from(&h);
    }
    let mut out = d.clone();
    for _ in 1..order {
        out = &out * &d;
    }
    Ok(OperationalMatrix {
        kind: OperatorKind::IntegerDerivative { order },
        data: out,
        cfg: *cfg,
    })
}

type WeightFn = dyn Fn(f64) -> Result<f64> + Send + Sync;

/// Order-distribution weight ρ on [lower, upper].
#[derive(Clone)]
pub struct WeightFunction {
    f: Arc<WeightFn>,
    pub description: String,
    pub lower: f64,
    pub upper: f64,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeightFunction({} on [{}, {}])", self.description, self.lower, self.upper)
    }
}

const WEIGHT_SAMPLES: usize = 64;
const WEIGHT_NEG_TOL: f64 = 1e-12;

impl WeightFunction {
    /// Builds a weight and checks ρ ≥ 0 on a 64-point Gauss sample and ∫ρ > 0.
    pub fn new<F>(description: impl Into<String>, lower: f64, upper: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        let w = Self::unchecked(description, lower, upper, f)?;
        let rule = gauss_legendre_rule(WEIGHT_SAMPLES, lower, upper)?;
        let mut mass = 0.0;
        for (a, wq) in rule.iter() {
            let v = w.eval(a)?;
            if v < -WEIGHT_NEG_TOL {
                return Err(Error::NegativeWeight { order: a, value: v });
            }
            mass += wq * v;
        }
        if !(mass > 0.0) {
            return Err(Error::ZeroWeightMass(mass));
        }
        Ok(w)
    }

    /// The identically zero weight; only useful for degenerate operators.
    pub fn zero(lower: f64, upper: f64) -> Result<Self> {
        Self::unchecked("0", lower, upper, |_| Ok(0.0))
    }

    fn unchecked<F>(description: impl Into<String>, lower: f64, upper: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        if !(0.0..=2.0).contains(&lower) || !(0.0..=2.0).contains(&upper) || !(lower < upper) {
            return Err(Error::Config(format!(
                "weight bounds [{lower}, {upper}] must satisfy 0 <= lower < upper <= 2"
            )));
        }
        Ok(Self {
            f: Arc::new(f),
            description: description.into(),
            lower,
            upper,
        })
    }

    pub fn eval(&self, order: f64) -> Result<f64> {
        (self.f)(order)
    }

    /// ∫ρ over the bounds (64-point Gauss).
    pub fn mass(&self) -> Result<f64> {
        gauss_legendre_rule(WEIGHT_SAMPLES, self.lower, self.upper)?.try_integrate(|a| self.eval(a))
    }

    /// Gauss nodes σ_s with combined weights w_s·ρ(σ_s).
    pub fn weighted_nodes(&self, points: usize) -> Result<Vec<(f64, f64)>> {
        let rule = gauss_legendre_rule(points, self.lower, self.upper)?;
        let mut out = Vec::with_capacity(points);
        for (s, w) in rule.iter() {
            let rho = self.eval(s)?;
            if rho < -WEIGHT_NEG_TOL {
                return Err(Error::NegativeWeight { order: s, value: rho });
            }
            out.push((s, w * rho));
        }
        Ok(out)
    }
}

/// 𝒬_i = Σ_s w_s ρ(σ_s) T^{−σ_s} D^{σ_s} ψ_i, the Gauss-discretized
/// distributed derivative of ψ_i on an axis of length `scale`.
pub fn distributed_series(
    cfg: &BasisConfig,
    i: usize,
    weight: &WeightFunction,
    points: usize,
    scale: f64,
) -> Result<FracPolySeries> {
    let nodes = weight.weighted_nodes(points)?;
    distributed_series_from_nodes(cfg, i, &nodes, scale)
}

fn distributed_series_from_nodes(
    cfg: &BasisConfig,
    i: usize,
    nodes: &[(f64, f64)],
    scale: f64,
) -> Result<FracPolySeries> {
    let mut q = FracPolySeries::zero();
    for &(order, wr) in nodes {
        let factor = wr * scale.powf(-order);
        q.add_scaled(&caputo_basis(cfg, i, order)?, factor);
    }
    Ok(q)
}

/// Distributed-order operational matrix D̂ with D̂[i][j] = ⟨𝒬_i, ψ_j⟩.
pub fn distributed_matrix(
    cfg: &BasisConfig,
    weight: &WeightFunction,
    points: usize,
) -> Result<OperationalMatrix> {
    distributed_matrix_scaled(cfg, weight, points, 1.0)
}

/// As [`distributed_matrix`] on an axis of length `scale` (each order σ
/// picks up a factor scale^{−σ}).
pub fn distributed_matrix_scaled(
    cfg: &BasisConfig,
    weight: &WeightFunction,
    points: usize,
    scale: f64,
) -> Result<OperationalMatrix> {
    require_global(cfg)?;
    let nodes = weight.weighted_nodes(points)?;
    let n = cfg.size();
    let mut data = DMatrix::zeros(n, n);
    for i in 0..n {
        let q = distributed_series_from_nodes(cfg, i, &nodes, scale)?;
        for j in 0..n {
            data[(i, j)] = q.inner_with_basis(j, cfg)?;
        }
    }
    Ok(OperationalMatrix {
        kind: OperatorKind::Distributed {
            lower: weight.lower,
            upper: weight.upper,
            points,
            weight: weight.description.clone(),
        },
        data,
        cfg: *cfg,
    })
}

/// Weakly singular kernel matrix P* with P*[i][j] = ⟨∫₀^t (t−ξ)^{−μ} ψ_i(ξ) dξ, ψ_j⟩,
/// so that ∫₀^t (t−ξ)^{−μ} Ψᵀ(ξ) dξ ≈ Ψᵀ(t) P*ᵀ.
pub fn singular_kernel_matrix(cfg: &BasisConfig, mu: f64) -> Result<OperationalMatrix> {
    singular_kernel_matrix_scaled(cfg, mu, 1.0)
}

/// As [`singular_kernel_matrix`] on a time axis of length `scale`.
pub fn singular_kernel_matrix_scaled(
    cfg: &BasisConfig,
    mu: f64,
    scale: f64,
) -> Result<OperationalMatrix> {
    require_global(cfg)?;
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::KernelExponent(mu));
    }
    let factor = scale.powf(1.0 - mu);
    let n = cfg.size();
    let mut data = DMatrix::zeros(n, n);
    for i in 0..n {
        let k = abel_basis(cfg, i, mu)?;
        for j in 0..n {
            data[(i, j)] = factor * k.inner_with_basis(j, cfg)?;
        }
    }
    Ok(OperationalMatrix {
        kind: OperatorKind::SingularKernel { mu },
        data,
        cfg: *cfg,
    })
}
