//! Legendre-wavelet tau solver for distributed-order time–space fractional
//! integro-differential equations with a weakly singular memory kernel.
//!
//! The crate is organised bottom-up: [`poly`] and [`basis`] provide the
//! polynomial family and projections, [`fractional`] builds operational
//! matrices, [`tau1d`] and [`tau2d`] assemble and solve the discrete
//! systems, and [`problem`] describes the equations to solve.

// Range checks are written as `!(x > lo)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod basis;
pub mod error;
pub mod expr;
pub mod fractional;
pub mod linalg;
pub mod oracle;
pub mod poly;
pub mod problem;
pub mod report;
pub mod separable;
pub mod special;
pub mod tau1d;
pub mod tau2d;

pub use error::{Error, Result};
