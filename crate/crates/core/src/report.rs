//! Error metrics and sampled reports of a solve.
//!
//! Metrics follow the benchmark tables: on the uniform grid x_i = i·h,
//! h = 1/(N_p − 1), at a fixed evaluation time,
//!
//! ```text
//! l2_paper = √(Σ h·|e_i|)      l2_rms = √(h·Σ e_i²)
//! linf     = max |e_i|         mean   = (1/N_p)·Σ |e_i|
//! ```
//!
//! The 2D variants sum over the (x, η) tensor grid with weight h², and the
//! mean keeps the 1/N_p normalization as printed (not 1/N_p²).

use crate::assembly::{OperatorCache, SolverOptions};
use crate::error::{Error, Result};
use crate::problem::{Field, Problem};
use crate::tau1d::{solve_1d_cached, Solution1D};
use crate::tau2d::{solve_2d_cached, Solution2D};

/// Default number of grid points per axis (h = 0.05).
pub const DEFAULT_GRID: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// √(Σ h|e|), the benchmark's printed formula.
    pub l2_paper: f64,
    /// √(h Σ e²), the conventional discrete L2 norm.
    pub l2_rms: f64,
    pub linf: f64,
    pub mean: f64,
}

fn check_grid(n_p: usize) -> Result<f64> {
    if n_p < 2 {
        return Err(Error::Config(format!("the error grid needs at least 2 points, got {n_p}")));
    }
    Ok(1.0 / (n_p - 1) as f64)
}

/// Metrics of errors sampled at x_i = i·h, i = 0..N_p−1.
pub fn error_metrics_1d(errors: &[f64], h: f64) -> Metrics {
    let n = errors.len().max(1) as f64;
    let abs_sum: f64 = errors.iter().map(|e| e.abs()).sum();
    let sq_sum: f64 = errors.iter().map(|e| e * e).sum();
    Metrics {
        l2_paper: (h * abs_sum).sqrt(),
        l2_rms: (h * sq_sum).sqrt(),
        linf: errors.iter().fold(0.0, |m, e| m.max(e.abs())),
        mean: abs_sum / n,
    }
}

/// Metrics of errors on an N_p × N_p tensor grid (any ordering).
pub fn error_metrics_2d(errors: &[f64], n_p: usize, h: f64) -> Metrics {
    let abs_sum: f64 = errors.iter().map(|e| e.abs()).sum();
    let sq_sum: f64 = errors.iter().map(|e| e * e).sum();
    Metrics {
        l2_paper: (h * h * abs_sum).sqrt(),
        l2_rms: (h * h * sq_sum).sqrt(),
        linf: errors.iter().fold(0.0, |m, e| m.max(e.abs())),
        mean: abs_sum / n_p.max(1) as f64,
    }
}

/// Solution of either dimension.
#[derive(Debug, Clone)]
pub enum Solution {
    OneD(Solution1D),
    TwoD(Solution2D),
}

impl Solution {
    /// Evaluates at `coords` = (x, t) or (x, η, t).
    pub fn eval(&self, coords: &[f64]) -> Result<f64> {
        match (self, coords) {
            (Solution::OneD(s), &[x, t]) => s.eval(x, t),
            (Solution::TwoD(s), &[x, e, t]) => s.eval(x, e, t),
            _ => Err(Error::DimensionMismatch(format!(
                "{} coordinates for a {}D solution",
                coords.len(),
                self.dimension()
            ))),
        }
    }

    pub fn dimension(&self) -> u8 {
        match self {
            Solution::OneD(_) => 1,
            Solution::TwoD(_) => 2,
        }
    }

    pub fn condition(&self) -> f64 {
        match self {
            Solution::OneD(s) => s.condition,
            Solution::TwoD(s) => s.condition,
        }
    }

    pub fn residual_norm(&self) -> f64 {
        match self {
            Solution::OneD(s) => s.residual_norm,
            Solution::TwoD(s) => s.residual_norm,
        }
    }

    pub fn seconds(&self) -> Option<f64> {
        match self {
            Solution::OneD(s) => s.seconds,
            Solution::TwoD(s) => s.seconds,
        }
    }

    /// Final time T of the time basis.
    pub fn final_time(&self) -> f64 {
        match self {
            Solution::OneD(s) => s.cfg_t.length,
            Solution::TwoD(s) => s.cfg_t.length,
        }
    }
}

/// Solves a problem of either dimension.
pub fn solve(problem: &Problem, opts: &SolverOptions, cache: &OperatorCache) -> Result<Solution> {
    match problem {
        Problem::OneD(p) => Ok(Solution::OneD(solve_1d_cached(p, opts, cache)?)),
        Problem::TwoD(p) => Ok(Solution::TwoD(solve_2d_cached(p, opts, cache)?)),
    }
}

/// One sampled point.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// (x, t) or (x, η, t).
    pub coords: Vec<f64>,
    pub approx: f64,
    pub exact: Option<f64>,
}

impl Sample {
    pub fn abs_error(&self) -> Option<f64> {
        self.exact.map(|e| (e - self.approx).abs())
    }
}

/// Sampled solution with error metrics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub dimension: u8,
    pub grid: usize,
    pub t_eval: f64,
    /// Diagonal points s = 0, 0.1, …, 1: (s, s·T) in 1D, (s, s, s·T) in 2D.
    pub table: Vec<Sample>,
    /// The metric grid at t_eval: x-major in 2D.
    pub profile: Vec<Sample>,
    /// Full sampling: (x, t) grid in 1D, (x, η) grid at t_eval in 2D.
    pub field: Vec<Sample>,
    /// Absent without an exact solution.
    pub metrics: Option<Metrics>,
    pub condition: f64,
    pub residual_norm: f64,
    pub seconds: Option<f64>,
}

fn sample(sol: &Solution, exact: Option<&Field>, coords: Vec<f64>) -> Result<Sample> {
    Ok(Sample {
        approx: sol.eval(&coords)?,
        exact: exact.map(|f| f.eval(&coords)).transpose()?,
        coords,
    })
}

impl SolveReport {
    /// Samples `sol` on an N_p-point grid per axis at time `t_eval`.
    pub fn build(problem: &Problem, sol: &Solution, t_eval: f64, n_p: usize) -> Result<Self> {
        let h = check_grid(n_p)?;
        let t_final = sol.final_time();
        if !(0.0..=t_final).contains(&t_eval) {
            return Err(Error::Domain {
                what: "evaluation time",
                value: t_eval,
                domain: "[0, T]",
            });
        }
        if problem.dimension() != sol.dimension() {
            return Err(Error::DimensionMismatch("problem and solution dimensions differ".into()));
        }
        let exact = problem.exact();
        let node = |i: usize| (i as f64 * h).min(1.0);
        let diag: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let (table, profile, field) = if sol.dimension() == 1 {
            let table = diag
                .iter()
                .map(|&s| sample(sol, exact, vec![s, s * t_final]))
                .collect::<Result<Vec<_>>>()?;
            let profile = (0..n_p)
                .map(|i| sample(sol, exact, vec![node(i), t_eval]))
                .collect::<Result<Vec<_>>>()?;
            let mut field = Vec::with_capacity(n_p * n_p);
            for i in 0..n_p {
                for k in 0..n_p {
                    field.push(sample(sol, exact, vec![node(i), node(k) * t_final])?);
                }
            }
            (table, profile, field)
        } else {
            let table = diag
                .iter()
                .map(|&s| sample(sol, exact, vec![s, s, s * t_final]))
                .collect::<Result<Vec<_>>>()?;
            let mut profile = Vec::with_capacity(n_p * n_p);
            for i in 0..n_p {
                for k in 0..n_p {
                    profile.push(sample(sol, exact, vec![node(i), node(k), t_eval])?);
                }
            }
            (table, profile.clone(), profile)
        };
        let metrics = exact.map(|_| {
            let errs: Vec<f64> = profile.iter().filter_map(Sample::abs_error).collect();
            if sol.dimension() == 1 {
                error_metrics_1d(&errs, h)
            } else {
                error_metrics_2d(&errs, n_p, h)
            }
        });
        Ok(Self {
            dimension: sol.dimension(),
            grid: n_p,
            t_eval,
            table,
            profile,
            field,
            metrics,
            condition: sol.condition(),
            residual_norm: sol.residual_norm(),
            seconds: sol.seconds(),
        })
    }

    /// Coordinate names of the samples in [`SolveReport::field`].
    pub fn coordinate_names(&self) -> &'static [&'static str] {
        if self.dimension == 1 {
            &["x", "t"]
        } else {
            &["x", "eta", "t"]
        }
    }
}
