//! Symplectic capacities, nonsqueezing checks and quantum-blob / EBK quantization.
//!
//! Phase space is `R^{2N}` with coordinates ordered `(q_1..q_N, p_1..p_N)`
//! and standard form `J = [[0, I], [-I, 0]]`.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod ebk;
pub mod error;
pub mod nonsqueezing;
pub mod plane;
pub mod potential;
pub mod quadrature;
pub mod region;
pub mod sampling;
pub mod symplectic;

pub use error::{Error, Result};
