use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("root refinement for degree {degree} did not converge within {iterations} iterations")]
    Convergence { degree: usize, iterations: usize },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("fractional operators require resolution 1, got {0}")]
    UnsupportedResolution(u32),

    #[error("integral of t^{0} over [0,1] diverges")]
    DivergentIntegral(f64),

    #[error("weight function is negative ({value:e}) at order {order}")]
    NegativeWeight { order: f64, value: f64 },

    #[error("weight function has non-positive mass {0:e} over its bounds")]
    ZeroWeightMass(f64),

    #[error("kernel exponent {0} must lie in (0, 1)")]
    KernelExponent(f64),

    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("expression error: {0}")]
    Expr(#[from] ExprError),

    #[error("invalid problem configuration: {0}")]
    Config(String),

    #[error("unknown built-in example {0:?} (expected ex1, ex2, ex3 or ex4)")]
    UnknownExample(String),
}
