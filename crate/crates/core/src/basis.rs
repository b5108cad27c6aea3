//! Legendre wavelet families, tensor bases and L² projection.
//!
//! A family with resolution R and count Λ has 2^{R−1} blocks of Λ
//! functions each; function (h, g) lives on [(h−1)/2^{R−1}, h/2^{R−1}]
//! and equals √(g+½)·2^{R/2}·P_g(2^R s − 2h + 1). Flat index is
//! (h−1)·Λ + g. At interior breakpoints the left block owns the point.
//!
//! Time axes of length T ≠ 1 are handled by evaluating the family at
//! s = t/T, so coefficient arrays are always with respect to [0, 1].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly::{gauss_legendre_rule, legendre};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisConfig {
    pub resolution: u32,
    pub count: usize,
    pub length: f64,
}

impl BasisConfig {
    pub fn new(resolution: u32, count: usize) -> Result<Self> {
        if resolution == 0 || resolution > 16 {
            return Err(Error::Config(format!(
                "resolution must be in 1..=16, got {resolution}"
            )));
        }
        if count == 0 {
            return Err(Error::Config("basis count must be positive".into()));
        }
        Ok(Self {
            resolution,
            count,
            length: 1.0,
        })
    }

    /// Shorthand for the global (R = 1) family with `count` polynomials.
    pub fn global(count: usize) -> Self {
        Self::new(1, count).expect("count must be positive")
    }

    pub fn with_length(mut self, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!("interval length must be positive, got {length}")));
        }
        self.length = length;
        Ok(self)
    }

    pub fn blocks(&self) -> usize {
        1 << (self.resolution - 1)
    }

    /// N = 2^{R−1}·Λ.
    pub fn size(&self) -> usize {
        self.blocks() * self.count
    }

    /// Block (1-based) owning the normalized coordinate `s`.
    fn block_of(&self, s: f64) -> usize {
        let nb = self.blocks();
        let h = (s * nb as f64).ceil() as usize;
        h.clamp(1, nb)
    }

    fn block_bounds(&self, h: usize) -> (f64, f64) {
        let nb = self.blocks() as f64;
        ((h - 1) as f64 / nb, h as f64 / nb)
    }

    pub(crate) fn normalize(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.length;
        if !(t >= -slack && t <= self.length + slack) {
            return Err(Error::Domain {
                what: "coordinate",
                value: t,
                domain: "[0, T]",
            });
        }
        Ok((t / self.length).clamp(0.0, 1.0))
    }

    /// Value of the single basis function (h, g) at normalized `s`, assuming
    /// `s` lies in block h.
    fn value_in_block(&self, h: usize, g: usize, s: f64) -> f64 {
        let scale = 2f64.powi(self.resolution as i32);
        let arg = scale * s - 2.0 * h as f64 + 1.0;
        (g as f64 + 0.5).sqrt() * scale.sqrt() * legendre(g, arg.clamp(-1.0, 1.0))
    }
}

/// Flat index of wavelet (block, degree); block is 1-based.
pub fn basis_index(cfg: &BasisConfig, block: usize, degree: usize) -> Result<usize> {
    if block == 0 || block > cfg.blocks() {
        return Err(Error::Index(format!(
            "block {block} not in 1..={}",
            cfg.blocks()
        )));
    }
    if degree >= cfg.count {
        return Err(Error::Index(format!(
            "degree {degree} not in 0..{}",
            cfg.count
        )));
    }
    Ok((block - 1) * cfg.count + degree)
}

/// Inverse of [`basis_index`].
pub fn split_index(cfg: &BasisConfig, flat: usize) -> Result<(usize, usize)> {
    if flat >= cfg.size() {
        return Err(Error::Index(format!("flat index {flat} not in 0..{}", cfg.size())));
    }
    Ok((flat / cfg.count + 1, flat % cfg.count))
}

/// Ψ(t): all basis functions at `t` ∈ [0, T].
pub fn eval_basis_vector(cfg: &BasisConfig, t: f64) -> Result<DVector<f64>> {
    let s = cfg.normalize(t)?;
    Ok(basis_vector_normalized(cfg, s))
}

pub(crate) fn basis_vector_normalized(cfg: &BasisConfig, s: f64) -> DVector<f64> {
    let mut v = DVector::zeros(cfg.size());
    let h = cfg.block_of(s);
    for g in 0..cfg.count {
        v[(h - 1) * cfg.count + g] = cfg.value_in_block(h, g, s);
    }
    v
}

/// Quadrature nodes (normalized to [0, 1]) with basis values sampled on them.
pub(crate) struct SampledBasis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// rows = nodes, cols = basis functions
    pub values: DMatrix<f64>,
}

impl SampledBasis {
    pub fn new(cfg: &BasisConfig, nq: usize) -> Result<Self> {
        let mut nodes = Vec::with_capacity(nq * cfg.blocks());
        let mut weights = Vec::with_capacity(nq * cfg.blocks());
        for h in 1..=cfg.blocks() {
            let (a, b) = cfg.block_bounds(h);
            let rule = gauss_legendre_rule(nq, a, b)?;
            nodes.extend_from_slice(&rule.nodes);
            weights.extend_from_slice(&rule.weights);
        }
        let mut values = DMatrix::zeros(nodes.len(), cfg.size());
        for (r, &s) in nodes.iter().enumerate() {
            let h = cfg.block_of(s);
            for g in 0..cfg.count {
                values[(r, (h - 1) * cfg.count + g)] = cfg.value_in_block(h, g, s);
            }
        }
        Ok(Self {
            nodes,
            weights,
            values,
        })
    }

    /// Basis values scaled row-wise by the quadrature weights.
    pub fn weighted(&self) -> DMatrix<f64> {
        let mut m = self.values.clone();
        for (r, &w) in self.weights.iter().enumerate() {
            m.row_mut(r).scale_mut(w);
        }
        m
    }
}

/// Quadrature density used when projecting non-polynomial data.
pub fn default_nq(cfg: &BasisConfig) -> usize {
    32.max(2 * cfg.count)
}

fn check_nq(cfg: &BasisConfig, nq: usize) -> Result<()> {
    if nq < cfg.count {
        return Err(Error::Config(format!(
            "projection needs at least {} nodes per subinterval, got {nq}",
            cfg.count
        )));
    }
    Ok(())
}

/// c_i = ⟨f, ψ_i⟩ on [0, T]; `f` is called with the physical coordinate.
pub fn project_1d<F>(mut f: F, cfg: &BasisConfig, nq: usize) -> Result<DVector<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_nq(cfg, nq)?;
    let sb = SampledBasis::new(cfg, nq)?;
    let mut c = DVector::zeros(cfg.size());
    for (r, (&s, &w)) in sb.nodes.iter().zip(&sb.weights).enumerate() {
        let fv = f(s * cfg.length)?;
        c.axpy(w * fv, &sb.values.row(r).transpose(), 1.0);
    }
    Ok(c)
}

/// Geometric panel ratio and depths of the graded projection rule.
const GRADE_RATIO: f64 = 0.1;
const GRADE_DEPTH_LEFT: i32 = 17;
const GRADE_DEPTH_RIGHT: i32 = 12;

/// Breakpoints of a composite rule on [0, 1] refined geometrically toward
/// both endpoints (down to 1e-17 at 0 and 1e-12 at 1).
fn graded_breakpoints() -> Vec<f64> {
    let mut br = vec![0.0];
    for k in (1..=GRADE_DEPTH_LEFT).rev() {
        br.push(GRADE_RATIO.powi(k));
    }
    br.push(0.5);
    for k in 1..=GRADE_DEPTH_RIGHT {
        br.push(1.0 - GRADE_RATIO.powi(k));
    }
    br.push(1.0);
    br
}

/// Like [`project_1d`], but each subinterval is integrated by a composite
/// rule of `nq`-point Gauss panels graded toward its endpoints. Suited to
/// data with weak endpoint singularities such as 1/log t or t^{1/2}.
pub fn project_1d_graded<F>(mut f: F, cfg: &BasisConfig, nq: usize) -> Result<DVector<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_nq(cfg, nq)?;
    let base = gauss_legendre_rule(nq, 0.0, 1.0)?;
    let br = graded_breakpoints();
    let nb = cfg.blocks();
    let mut c = DVector::zeros(cfg.size());
    for h in 1..=nb {
        let (lo, hi) = cfg.block_bounds(h);
        for w in br.windows(2) {
            let (a, b) = (lo + (hi - lo) * w[0], lo + (hi - lo) * w[1]);
            for (u, wu) in base.iter() {
                let s = a + (b - a) * u;
                let fv = f(s * cfg.length)?;
                let weight = wu * (b - a) * fv;
                for g in 0..cfg.count {
                    c[(h - 1) * cfg.count + g] += weight * cfg.value_in_block(h, g, s);
                }
            }
        }
    }
    Ok(c)
}

/// ℱ with f(x,t) ≈ Ψ_tᵀ(t) ℱ Ψ_x(x); `f` takes `(x, t)`.
pub fn project_2d<F>(
    mut f: F,
    cfg_t: &BasisConfig,
    cfg_x: &BasisConfig,
    nq: usize,
) -> Result<DMatrix<f64>>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    check_nq(cfg_t, nq)?;
    check_nq(cfg_x, nq)?;
    let st = SampledBasis::new(cfg_t, nq)?;
    let sx = SampledBasis::new(cfg_x, nq)?;
    let mut samples = DMatrix::zeros(st.nodes.len(), sx.nodes.len());
    for (i, &s) in st.nodes.iter().enumerate() {
        let t = s * cfg_t.length;
        for (j, &xn) in sx.nodes.iter().enumerate() {
            samples[(i, j)] = f(xn * cfg_x.length, t)?;
        }
    }
    Ok(st.weighted().transpose() * samples * sx.weighted())
}

/// ℱ of shape N_t × (N_x·N_η) with column index x·N_η + η; `f` takes `(x, η, t)`.
pub fn project_3d<F>(
    mut f: F,
    cfg_t: &BasisConfig,
    cfg_x: &BasisConfig,
    cfg_eta: &BasisConfig,
    nq: usize,
) -> Result<DMatrix<f64>>
where
    F: FnMut(f64, f64, f64) -> Result<f64>,
{
    check_nq(cfg_t, nq)?;
    check_nq(cfg_x, nq)?;
    check_nq(cfg_eta, nq)?;
    let st = SampledBasis::new(cfg_t, nq)?;
    let sx = SampledBasis::new(cfg_x, nq)?;
    let se = SampledBasis::new(cfg_eta, nq)?;
    let wt = st.weighted();
    let wx = sx.weighted();
    let we = se.weighted();
    let (nt, nx, ne) = (cfg_t.size(), cfg_x.size(), cfg_eta.size());
    let mut out = DMatrix::zeros(nt, nx * ne);
    // Contract η at each (t, x) node, then accumulate the x-projection.
    let mut sample_eta = DVector::zeros(se.nodes.len());
    let mut partial: Vec<DMatrix<f64>> = vec![DMatrix::zeros(st.nodes.len(), nx); ne];
    for (j, &xn) in sx.nodes.iter().enumerate() {
        let x = xn * cfg_x.length;
        for (i, &s) in st.nodes.iter().enumerate() {
            let t = s * cfg_t.length;
            for (k, &en) in se.nodes.iter().enumerate() {
                sample_eta[k] = f(x, en * cfg_eta.length, t)?;
            }
            let proj_eta = we.tr_mul(&sample_eta);
            for (c, p) in partial.iter_mut().enumerate() {
                for bx in 0..nx {
                    p[(i, bx)] += proj_eta[c] * wx[(j, bx)];
                }
            }
        }
    }
    for (c, p) in partial.iter().enumerate() {
        let tx = wt.tr_mul(p);
        for it in 0..nt {
            for bx in 0..nx {
                out[(it, bx * ne + c)] = tx[(it, bx)];
            }
        }
    }
    Ok(out)
}

fn check_shape(a: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if a.nrows() != rows || a.ncols() != cols {
        return Err(Error::DimensionMismatch(format!(
            "coefficient matrix is {}x{}, expected {rows}x{cols}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Ψ_tᵀ(t)·A·Ψ_x(x).
pub fn eval_solution_1d(
    a: &DMatrix<f64>,
    cfg_t: &BasisConfig,
    cfg_x: &BasisConfig,
    x: f64,
    t: f64,
) -> Result<f64> {
    check_shape(a, cfg_t.size(), cfg_x.size())?;
    let pt = eval_basis_vector(cfg_t, t)?;
    let px = eval_basis_vector(cfg_x, x)?;
    Ok(pt.dot(&(a * px)))
}

/// Ψ_tᵀ(t)·A·(Ψ_x(x) ⊗ Ψ_η(η)).
pub fn eval_solution_2d(
    a: &DMatrix<f64>,
    cfg_t: &BasisConfig,
    cfg_x: &BasisConfig,
    cfg_eta: &BasisConfig,
    x: f64,
    eta: f64,
    t: f64,
) -> Result<f64> {
    check_shape(a, cfg_t.size(), cfg_x.size() * cfg_eta.size())?;
    let pt = eval_basis_vector(cfg_t, t)?;
    let px = eval_basis_vector(cfg_x, x)?;
    let pe = eval_basis_vector(cfg_eta, eta)?;
    let space = px.kronecker(&pe);
    Ok(pt.dot(&(a * space)))
}

/// ⟨ψ_i, ψ_j⟩ over [0, 1], computed by Gauss quadrature exact for the products.
pub fn gram_matrix(cfg: &BasisConfig) -> DMatrix<f64> {
    let sb = SampledBasis::new(cfg, cfg.count).expect("count >= 1");
    sb.weighted().transpose() * &sb.values
}

/// Rectangular identity with `rows` rows and `cols` columns.
pub fn selector(rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| if i == j { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ok(v: f64) -> Result<f64> {
        Ok(v)
    }

    #[test]
    fn index_layout() {
        let cfg = BasisConfig::new(2, 4).unwrap();
        assert_eq!(basis_index(&cfg, 1, 0).unwrap(), 0);
        assert_eq!(basis_index(&cfg, 2, 0).unwrap(), 4);
        assert_eq!(basis_index(&cfg, 1, 3).unwrap(), 3);
        assert!(basis_index(&cfg, 3, 0).is_err());
        assert!(basis_index(&cfg, 0, 0).is_err());
        assert!(basis_index(&cfg, 1, 4).is_err());
        for flat in 0..cfg.size() {
            let (h, g) = split_index(&cfg, flat).unwrap();
            assert_eq!(basis_index(&cfg, h, g).unwrap(), flat);
        }
    }

    #[test]
    fn basis_vector_examples() {
        let v = eval_basis_vector(&BasisConfig::global(2), 0.3).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert!((v[1] - 3f64.sqrt() * (2.0 * 0.3 - 1.0)).abs() < 1e-15);
        assert!((v[1] + 0.69282).abs() < 1e-5);
        let v = eval_basis_vector(&BasisConfig::global(1), 0.81).unwrap();
        assert_eq!(v.len(), 1);
        assert!((v[0] - 1.0).abs() < 1e-15);
        let cfg = BasisConfig::new(2, 1).unwrap();
        let v = eval_basis_vector(&cfg, 0.75).unwrap();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 2f64.sqrt()).abs() < 1e-15);
        // left block owns the breakpoint
        let v = eval_basis_vector(&cfg, 0.5).unwrap();
        assert!(v[0] != 0.0 && v[1] == 0.0);
        assert!(eval_basis_vector(&cfg, 1.2).is_err());
    }

    #[test]
    fn rescaled_time_axis() {
        let cfg = BasisConfig::global(3).with_length(2.0).unwrap();
        let a = eval_basis_vector(&cfg, 1.0).unwrap();
        let b = eval_basis_vector(&BasisConfig::global(3), 0.5).unwrap();
        assert!((a - b).norm() < 1e-15);
        assert!(eval_basis_vector(&cfg, 2.0).is_ok());
    }

    #[test]
    fn gram_is_identity() {
        for r in 1..=3 {
            for l in 1..=8 {
                let cfg = BasisConfig::new(r, l).unwrap();
                let g = gram_matrix(&cfg);
                let err = (g - DMatrix::identity(cfg.size(), cfg.size())).amax();
                assert!(err < 1e-12, "R={r} L={l} err={err}");
            }
        }
    }

    #[test]
    fn selector_is_rectangular_identity() {
        let s = selector(3, 4);
        assert_eq!(s.shape(), (3, 4));
        let g = gram_matrix(&BasisConfig::global(4));
        let sel = &s * g;
        assert!((sel - selector(3, 4)).amax() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let cfg = BasisConfig::global(4);
        // ψ_1 projects to e_1
        let c = project_1d(|t| ok(3f64.sqrt() * (2.0 * t - 1.0)), &cfg, 32).unwrap();
        for (i, &ci) in c.iter().enumerate() {
            let want = if i == 1 { 1.0 } else { 0.0 };
            assert!((ci - want).abs() < 1e-13);
        }
        // √t has a singular derivative at 0, so Gauss converges only algebraically.
        let c = project_1d(|t| ok(t.sqrt()), &cfg, 256).unwrap();
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-8);
        let cfg3 = BasisConfig::global(3);
        let c = project_1d(|t| ok(t * t), &cfg3, 32).unwrap();
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            let recon = eval_basis_vector(&cfg3, t).unwrap().dot(&c);
            assert!((recon - t * t).abs() < 1e-13);
        }
        assert!(project_1d(ok, &cfg, 2).is_err());
    }

    #[test]
    fn projection_2d_examples() {
        let c2 = BasisConfig::global(2);
        let f = project_2d(|_, _| ok(1.0), &c2, &c2, 32).unwrap();
        assert!((f[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(f[(0, 1)].abs() + f[(1, 0)].abs() + f[(1, 1)].abs() < 1e-14);

        let c3 = BasisConfig::global(3);
        let f = project_2d(|x, t| ok(x * x * t * t), &c3, &c3, 32).unwrap();
        for &(x, t) in &[(0.1, 0.9), (0.5, 0.5), (0.93, 0.2)] {
            let u = eval_solution_1d(&f, &c3, &c3, x, t).unwrap();
            assert!((u - x * x * t * t).abs() < 1e-12);
        }
        assert!((eval_solution_1d(&f, &c3, &c3, 0.5, 0.5).unwrap() - 0.0625).abs() < 1e-12);

        let c4 = BasisConfig::global(4);
        let f = project_2d(
            |x, t| {
                ok(3f64.sqrt() * (2.0 * t - 1.0) * 5f64.sqrt() * (6.0 * x * x - 6.0 * x + 1.0))
            },
            &c4,
            &c4,
            32,
        )
        .unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i, j) == (1, 2) { 1.0 } else { 0.0 };
                assert!((f[(i, j)] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn projection_3d_examples() {
        let c2 = BasisConfig::global(2);
        let c3 = BasisConfig::global(3);
        let f = project_3d(|_, _, _| ok(1.0), &c3, &c2, &c3, 32).unwrap();
        assert_eq!(f.shape(), (3, 6));
        assert!((f[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(f.iter().skip(1).all(|v| v.abs() < 1e-14));

        let f = project_3d(|x, e, _| ok(x * e), &c2, &c2, &c2, 32).unwrap();
        for &(x, e, t) in &[(0.2, 0.7, 0.4), (0.9, 0.1, 0.8)] {
            let u = eval_solution_2d(&f, &c2, &c2, &c2, x, e, t).unwrap();
            assert!((u - x * e).abs() < 1e-12);
        }

        // ψ_1(t) ψ_2(x) ψ_1(η) lands at (1, 2·N_η + 1)
        let p1 = |s: f64| 3f64.sqrt() * (2.0 * s - 1.0);
        let p2 = |s: f64| 5f64.sqrt() * (6.0 * s * s - 6.0 * s + 1.0);
        let f = project_3d(|x, e, t| ok(p1(t) * p2(x) * p1(e)), &c3, &c3, &c3, 32).unwrap();
        for r in 0..3 {
            for c in 0..9 {
                let want = if (r, c) == (1, 2 * 3 + 1) { 1.0 } else { 0.0 };
                assert!((f[(r, c)] - want).abs() < 1e-13, "({r},{c})");
            }
        }
    }

    #[test]
    fn zero_and_constant_solutions() {
        let c = BasisConfig::global(3);
        let z = DMatrix::zeros(3, 3);
        assert_eq!(eval_solution_1d(&z, &c, &c, 0.3, 0.4).unwrap(), 0.0);
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 0)] = 1.0;
        assert!((eval_solution_1d(&a, &c, &c, 0.3, 0.9).unwrap() - 1.0).abs() < 1e-15);
        assert!(eval_solution_1d(&DMatrix::zeros(2, 3), &c, &c, 0.3, 0.9).is_err());
    }

    #[test]
    fn rank_one_kronecker_evaluation() {
        let c = BasisConfig::global(3);
        let u = DVector::from_vec(vec![0.3, -1.2, 0.5]);
        let v = DVector::from_vec(vec![1.1, 0.2, -0.7]);
        let w = DVector::from_vec(vec![-0.4, 0.9, 2.0]);
        let a = &u * v.kronecker(&w).transpose();
        for &(x, e, t) in &[(0.1, 0.2, 0.3), (0.8, 0.55, 0.01)] {
            let got = eval_solution_2d(&a, &c, &c, &c, x, e, t).unwrap();
            let want = u.dot(&eval_basis_vector(&c, t).unwrap())
                * v.dot(&eval_basis_vector(&c, x).unwrap())
                * w.dot(&eval_basis_vector(&c, e).unwrap());
            assert!((got - want).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(k in 0.5f64..4.0, r in 1u32..=2, l in 1usize..6) {
            let cfg = BasisConfig::new(r, l).unwrap();
            let c = project_1d(|t| ok((k * t).sin() + t.sqrt()), &cfg, 32).unwrap();
            let again = project_1d(|t| ok(eval_basis_vector(&cfg, t)?.dot(&c)), &cfg, 32).unwrap();
            prop_assert!((again - &c).amax() < 1e-12);
        }

        #[test]
        fn parseval_on_span(coeffs in proptest::collection::vec(-2.0f64..2.0, 1..7)) {
            let cfg = BasisConfig::global(coeffs.len());
            let c = DVector::from_vec(coeffs);
            let rule = gauss_legendre_rule(cfg.count + 1, 0.0, 1.0).unwrap();
            let l2 = rule.integrate(|t| eval_basis_vector(&cfg, t).unwrap().dot(&c).powi(2));
            prop_assert!((c.norm_squared() - l2).abs() < 1e-10);
        }
    }
}
