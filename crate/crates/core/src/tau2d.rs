//! Tau/collocation solver for the two-dimensional problem.
//!
//! U ≈ Ψ_tᵀ(t)·A·(Ψ_x(x) ⊗ Ψ_η(η)), so A is N_t × (N_x·N_η) with column
//! index x·N_η + η. Space operators act on the columns through Kronecker
//! lifts, D̂_x ⊗ I and I ⊗ D̂_η, and the residual reads
//!
//! ```text
//! G(A) = D̂_tᵀA + A − K·A·(D̂_x⊗I) − K·A·(I⊗D̂_η) − P*ᵀ·A·(D²⊗I + I⊗D²) − F
//! ```
//!
//! Tau equations keep the first N_t − 1 time modes and drop the two highest
//! modes in each space direction. The initial condition is collocated on
//! the tensor grid of p_{N_x} × p_{N_η} roots. Each face uses N − 1 nodes
//! in its free space coordinate (see [`face_nodes`]) times the roots of
//! p_{N_t−1} in time.

use log::debug;
use nalgebra::{DMatrix, DVector};

use crate::assembly::{LinearSystem, OperatorCache, RowLabel, SolverOptions, Stopwatch};
use crate::basis::{eval_basis_vector, eval_solution_2d, BasisConfig};
use crate::error::{Error, Result};
use crate::linalg::{kron, unvec};
use crate::poly::shifted_legendre_roots;
use crate::problem::Problem2D;
use crate::separable::project_source_3d;

/// Operational matrices of a 2D solve.
#[derive(Debug, Clone)]
pub struct Operators2D {
    pub cfg_t: BasisConfig,
    pub cfg_x: BasisConfig,
    pub cfg_eta: BasisConfig,
    pub dist_time: DMatrix<f64>,
    pub dist_x: DMatrix<f64>,
    pub dist_eta: DMatrix<f64>,
    pub second_x: DMatrix<f64>,
    pub second_eta: DMatrix<f64>,
    /// Shared by both directions: the kernel exponent is the same.
    pub kernel: DMatrix<f64>,
    pub viscosity: f64,
}

impl Operators2D {
    pub fn build(p: &Problem2D, opts: &SolverOptions, cache: &OperatorCache) -> Result<Self> {
        opts.validate()?;
        let c = &p.coefficients;
        let cfg_t = BasisConfig::global(opts.lambda).with_length(c.final_time)?;
        let cfg_x = BasisConfig::global(opts.lambda);
        let cfg_eta = cfg_x;
        let dist_x = (*cache.distributed(&cfg_x, &c.weight_space, opts.points_space, 1.0)?).clone();
        let second_x = (*cache.derivative(&cfg_x, 2)?).clone();
        Ok(Self {
            dist_time: (*cache.distributed(&cfg_t, &c.weight_time, opts.points, c.final_time)?).clone(),
            dist_eta: dist_x.clone(),
            second_eta: second_x.clone(),
            dist_x,
            second_x,
            kernel: (*cache.kernel(&cfg_t, c.kernel_exponent, c.final_time)?).clone(),
            cfg_t,
            cfg_x,
            cfg_eta,
            viscosity: c.viscosity,
        })
    }

    fn lift_x(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        kron(m, &DMatrix::identity(self.cfg_eta.size(), self.cfg_eta.size()))
    }

    fn lift_eta(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        kron(&DMatrix::identity(self.cfg_x.size(), self.cfg_x.size()), m)
    }

    /// Space operators acting on the columns of A: (distributed, second-order).
    fn space_operators(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (
            self.lift_x(&self.dist_x) + self.lift_eta(&self.dist_eta),
            self.lift_x(&self.second_x) + self.lift_eta(&self.second_eta),
        )
    }

    /// The linear map vec(A) ↦ vec(G(A) + F).
    pub fn operator(&self) -> DMatrix<f64> {
        let nt = self.cfg_t.size();
        let ns = self.cfg_x.size() * self.cfg_eta.size();
        let (dist, second) = self.space_operators();
        let it = DMatrix::identity(nt, nt);
        kron(&DMatrix::identity(ns, ns), &self.dist_time.transpose())
            + DMatrix::identity(nt * ns, nt * ns)
            - kron(&dist.transpose(), &it) * self.viscosity
            - kron(&second.transpose(), &self.kernel.transpose())
    }

    pub fn residual(&self, a: &DMatrix<f64>, f: &DMatrix<f64>) -> DMatrix<f64> {
        let (dist, second) = self.space_operators();
        self.dist_time.transpose() * a + a - a * dist * self.viscosity
            - self.kernel.transpose() * a * second
            - f
    }
}

/// Boundary data on one face, taking the face's two free coordinates.
pub type FaceData<'a> = &'a dyn Fn(f64, f64) -> Result<f64>;

/// Initial, x-face and η-face data for [`assemble_2d_with`].
pub struct BoundaryData2D<'a> {
    /// ν(x, η)
    pub ic: FaceData<'a>,
    /// U(0, η, t)
    pub left: FaceData<'a>,
    /// U(1, η, t)
    pub right: FaceData<'a>,
    /// U(x, 0, t)
    pub bottom: FaceData<'a>,
    /// U(x, 1, t)
    pub top: FaceData<'a>,
}

/// Assembles the (N_t·N_x·N_η)-equation system for given source coefficients.
pub fn assemble_2d_with(
    ops: &Operators2D,
    f: &DMatrix<f64>,
    data: &BoundaryData2D<'_>,
) -> Result<LinearSystem> {
    let (nt, nx, ne) = (ops.cfg_t.size(), ops.cfg_x.size(), ops.cfg_eta.size());
    if f.nrows() != nt || f.ncols() != nx * ne {
        return Err(Error::DimensionMismatch(format!(
            "source coefficients are {}x{}, expected {nt}x{}",
            f.nrows(),
            f.ncols(),
            nx * ne
        )));
    }
    let l = ops.operator();
    let mut sys = LinearSystem::with_capacity(nt * nx * ne);
    for jx in 0..nx - 2 {
        for je in 0..ne - 2 {
            let col = jx * ne + je;
            for i in 0..nt - 1 {
                sys.push_row(RowLabel::Tau, &l.row(i + nt * col).transpose(), f[(i, col)])?;
            }
        }
    }

    let basis_t = |t: f64| eval_basis_vector(&ops.cfg_t, t);
    let basis_x = |x: f64| eval_basis_vector(&ops.cfg_x, x);
    let basis_e = |e: f64| eval_basis_vector(&ops.cfg_eta, e);

    let psi_t0 = basis_t(0.0)?;
    let ic_x = shifted_legendre_roots(nx)?;
    let ic_e = shifted_legendre_roots(ne)?;
    for &x in &ic_x {
        let px = basis_x(x)?;
        for &e in &ic_e {
            let r = px.kronecker(&basis_e(e)?).kronecker(&psi_t0);
            sys.push_row(RowLabel::Ic, &r, (data.ic)(x, e)?)?;
        }
    }

    let bc_t: Vec<(f64, DVector<f64>)> = shifted_legendre_roots(nt - 1)?
        .into_iter()
        .map(|s| {
            let t = s * ops.cfg_t.length;
            Ok((t, basis_t(t)?))
        })
        .collect::<Result<_>>()?;
    let (lo_e, hi_e) = (face_nodes(ne, 0.0)?, face_nodes(ne, 1.0)?);
    let (lo_x, hi_x) = (face_nodes(nx, 0.0)?, face_nodes(nx, 1.0)?);
    let faces: [(RowLabel, bool, f64, &[f64], FaceData<'_>); 4] = [
        (RowLabel::BcLeft, true, 0.0, &hi_e, data.left),
        (RowLabel::BcRight, true, 1.0, &lo_e, data.right),
        (RowLabel::BcBottom, false, 0.0, &lo_x, data.bottom),
        (RowLabel::BcTop, false, 1.0, &hi_x, data.top),
    ];
    for (label, x_face, fixed, nodes, g) in faces {
        let pf = if x_face { basis_x(fixed)? } else { basis_e(fixed)? };
        for &s in nodes {
            let ps = if x_face { basis_e(s)? } else { basis_x(s)? };
            let space = if x_face { pf.kronecker(&ps) } else { ps.kronecker(&pf) };
            for (t, pt) in &bc_t {
                sys.push_row(label, &space.kronecker(pt), g(s, *t)?)?;
            }
        }
    }
    sys.finish()
}

/// Free-coordinate nodes of one face: the roots of p_{n−2} plus one corner.
///
/// Walking the square counterclockwise, every face owns the corner it starts
/// from, so each corner is used once. Using one symmetric set on all faces
/// instead leaves a boundary trace that vanishes at every face node.
fn face_nodes(n: usize, corner: f64) -> Result<Vec<f64>> {
    let mut nodes = if n > 2 { shifted_legendre_roots(n - 2)? } else { Vec::new() };
    nodes.push(corner);
    nodes.sort_by(f64::total_cmp);
    Ok(nodes)
}

fn assemble_problem(ops: &Operators2D, f: &DMatrix<f64>, p: &Problem2D) -> Result<LinearSystem> {
    let data = BoundaryData2D {
        ic: &|x, e| p.ic.eval(&[x, e]),
        left: &|e, t| p.bc_left.eval(&[e, t]),
        right: &|e, t| p.bc_right.eval(&[e, t]),
        bottom: &|x, t| p.bc_bottom.eval(&[x, t]),
        top: &|x, t| p.bc_top.eval(&[x, t]),
    };
    assemble_2d_with(ops, f, &data)
}

/// Projects the source and assembles the tau system of `p`.
pub fn assemble_2d(p: &Problem2D, ops: &Operators2D, nq: usize) -> Result<LinearSystem> {
    let f = project_source_3d(&p.source, &ops.cfg_t, &ops.cfg_x, &ops.cfg_eta, nq)?;
    assemble_problem(ops, &f, p)
}

/// Result of a 2D solve.
#[derive(Debug, Clone)]
pub struct Solution2D {
    /// Coefficient matrix A (N_t × N_x·N_η).
    pub coeffs: DMatrix<f64>,
    pub cfg_t: BasisConfig,
    pub cfg_x: BasisConfig,
    pub cfg_eta: BasisConfig,
    pub source: DMatrix<f64>,
    pub condition: f64,
    pub residual_norm: f64,
    /// max |G| over the tau-selected modes.
    pub tau_residual: f64,
    pub seconds: Option<f64>,
}

impl Solution2D {
    pub fn eval(&self, x: f64, eta: f64, t: f64) -> Result<f64> {
        eval_solution_2d(&self.coeffs, &self.cfg_t, &self.cfg_x, &self.cfg_eta, x, eta, t)
    }
}

pub fn solve_2d(p: &Problem2D, opts: &SolverOptions) -> Result<Solution2D> {
    solve_2d_cached(p, opts, &OperatorCache::new())
}

pub fn solve_2d_cached(p: &Problem2D, opts: &SolverOptions, cache: &OperatorCache) -> Result<Solution2D> {
    let clock = Stopwatch::start();
    let ops = Operators2D::build(p, opts, cache)?;
    let f = project_source_3d(
        &p.source,
        &ops.cfg_t,
        &ops.cfg_x,
        &ops.cfg_eta,
        opts.projection_nodes(),
    )?;
    let sys = assemble_problem(&ops, &f, p)?;
    let rep = sys.solve()?;
    let (nt, nx, ne) = (ops.cfg_t.size(), ops.cfg_x.size(), ops.cfg_eta.size());
    let a = unvec(&rep.solution, nt, nx * ne)?;
    let g = ops.residual(&a, &f);
    let mut tau_residual: f64 = 0.0;
    for jx in 0..nx - 2 {
        for je in 0..ne - 2 {
            for i in 0..nt - 1 {
                tau_residual = tau_residual.max(g[(i, jx * ne + je)].abs());
            }
        }
    }
    let seconds = clock.seconds();
    debug!(
        "2D solve: Λ={} P={} cond={:.3e} refined={} time={:?}",
        opts.lambda, opts.points, rep.condition, rep.refined, seconds
    );
    Ok(Solution2D {
        residual_norm: g.norm(),
        tau_residual,
        coeffs: a,
        cfg_t: ops.cfg_t,
        cfg_x: ops.cfg_x,
        cfg_eta: ops.cfg_eta,
        source: f,
        condition: rep.condition,
        seconds,
    })
}
