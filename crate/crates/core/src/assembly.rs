//! Pieces shared by the 1D and 2D tau solvers: solver options, labelled
//! linear systems, and a cache of operational matrices.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};

use crate::basis::{default_nq, BasisConfig};
use crate::error::{Error, Result};
use crate::fractional::{
    distributed_matrix_scaled, integer_derivative_matrix, singular_kernel_matrix_scaled,
    WeightFunction,
};
use crate::linalg::{solve_dense, SolveReport};
use crate::problem::SolverConfig;

/// Discretization parameters of a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Polynomial count Λ in every direction.
    pub lambda: usize,
    /// Gauss points over the time order α.
    pub points: usize,
    /// Gauss points over the space order β.
    pub points_space: usize,
    pub resolution: u32,
    /// Projection nodes per subinterval; `None` picks max(32, 2Λ).
    pub nq: Option<usize>,
}

impl SolverOptions {
    pub fn new(lambda: usize, points: usize) -> Self {
        Self {
            lambda,
            points,
            points_space: points,
            resolution: 1,
            nq: None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.resolution != 1 {
            return Err(Error::UnsupportedResolution(self.resolution));
        }
        if self.lambda < 2 {
            return Err(Error::Config(format!(
                "the tau scheme needs at least 2 polynomials per direction, got {}",
                self.lambda
            )));
        }
        if self.points == 0 || self.points_space == 0 {
            return Err(Error::Config("Gauss point counts must be positive".into()));
        }
        Ok(())
    }

    /// Projection nodes per subinterval.
    pub fn projection_nodes(&self) -> usize {
        self.nq
            .unwrap_or_else(|| default_nq(&BasisConfig::global(self.lambda.max(1))))
    }
}

impl From<SolverConfig> for SolverOptions {
    fn from(c: SolverConfig) -> Self {
        Self {
            lambda: c.lambda,
            points: c.points,
            points_space: c.points,
            resolution: c.resolution,
            nq: c.nq,
        }
    }
}

/// Origin of an equation in an assembled system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowLabel {
    Tau,
    Ic,
    /// x = 0
    BcLeft,
    /// x = 1
    BcRight,
    /// η = 0
    BcBottom,
    /// η = 1
    BcTop,
}

impl fmt::Display for RowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowLabel::Tau => "tau",
            RowLabel::Ic => "ic",
            RowLabel::BcLeft => "bc-left",
            RowLabel::BcRight => "bc-right",
            RowLabel::BcBottom => "bc-bottom",
            RowLabel::BcTop => "bc-top",
        })
    }
}

/// Square system M·vec(A) = b with one label per row.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub labels: Vec<RowLabel>,
}

impl LinearSystem {
    pub(crate) fn with_capacity(unknowns: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(unknowns, unknowns),
            rhs: DVector::zeros(unknowns),
            labels: Vec::with_capacity(unknowns),
        }
    }

    pub(crate) fn push_row(&mut self, label: RowLabel, row: &DVector<f64>, rhs: f64) -> Result<()> {
        let r = self.labels.len();
        if r >= self.matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "more than {} equations for {} unknowns",
                r,
                self.matrix.ncols()
            )));
        }
        self.matrix.row_mut(r).copy_from(&row.transpose());
        self.rhs[r] = rhs;
        self.labels.push(label);
        Ok(())
    }

    pub(crate) fn finish(self) -> Result<Self> {
        if self.labels.len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "assembled {} equations for {} unknowns",
                self.labels.len(),
                self.matrix.nrows()
            )));
        }
        Ok(self)
    }

    pub fn count(&self, label: RowLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn solve(&self) -> Result<SolveReport> {
        solve_dense(&self.matrix, &self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum CacheKey {
    Derivative {
        count: usize,
        resolution: u32,
        order: u32,
    },
    Distributed {
        count: usize,
        weight: String,
        bounds: (u64, u64),
        points: usize,
        scale: u64,
    },
    Kernel {
        count: usize,
        mu: u64,
        scale: u64,
    },
}

/// Thread-safe cache of operational matrices.
///
/// Distributed-order matrices are keyed by the weight's description and
/// bounds, so two weights sharing a cache must have distinct descriptions.
#[derive(Debug, Default)]
pub struct OperatorCache {
    map: RwLock<HashMap<CacheKey, Arc<DMatrix<f64>>>>,
}

impl OperatorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_build(
        &self,
        key: CacheKey,
        build: impl FnOnce() -> Result<DMatrix<f64>>,
    ) -> Result<Arc<DMatrix<f64>>> {
        if let Some(m) = self.map.read().ok().and_then(|m| m.get(&key).cloned()) {
            return Ok(m);
        }
        let built = Arc::new(build()?);
        let mut guard = self
            .map
            .write()
            .map_err(|_| Error::Config("operator cache lock poisoned".into()))?;
        Ok(guard.entry(key).or_insert(built).clone())
    }

    pub fn derivative(&self, cfg: &BasisConfig, order: u32) -> Result<Arc<DMatrix<f64>>> {
        let key = CacheKey::Derivative {
            count: cfg.count,
            resolution: cfg.resolution,
            order,
        };
        self.get_or_build(key, || Ok(integer_derivative_matrix(cfg, order)?.data))
    }

    pub fn distributed(
        &self,
        cfg: &BasisConfig,
        weight: &WeightFunction,
        points: usize,
        scale: f64,
    ) -> Result<Arc<DMatrix<f64>>> {
        let key = CacheKey::Distributed {
            count: cfg.count,
            weight: weight.description.clone(),
            bounds: (weight.lower.to_bits(), weight.upper.to_bits()),
            points,
            scale: scale.to_bits(),
        };
        self.get_or_build(key, || {
            Ok(distributed_matrix_scaled(cfg, weight, points, scale)?.data)
        })
    }

    pub fn kernel(&self, cfg: &BasisConfig, mu: f64, scale: f64) -> Result<Arc<DMatrix<f64>>> {
        let key = CacheKey::Kernel {
            count: cfg.count,
            mu: mu.to_bits(),
            scale: scale.to_bits(),
        };
        self.get_or_build(key, || Ok(singular_kernel_matrix_scaled(cfg, mu, scale)?.data))
    }
}

/// Wall-clock timer; inert on targets without a clock.
pub(crate) struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub fn seconds(&self) -> Option<f64> {
        #[cfg(not(target_arch = "wasm32"))]
        {
            Some(self.start.elapsed().as_secs_f64())
        }
        #[cfg(target_arch = "wasm32")]
        {
            None
        }
    }
}
