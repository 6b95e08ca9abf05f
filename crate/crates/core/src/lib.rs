//! Simulation of a two-level system measured by a two-level apparatus that is
//! itself monitored by a thermal bosonic bath.
//!
//! The crate covers the whole chain: unitary pre-measurement, phase-damping
//! decoherence of the system+apparatus state (closed form and a brute-force
//! truncated-bath reference), selection of the pointer basis, and the
//! envariance/branch-counting route to Born probabilities.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`). The
//! `*64` aliases below fix the scalar to `f64`, which is what the CLI uses.

// Negated comparisons are used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod envariance;
pub mod error;
pub mod hilbert;
pub mod measurement;
pub mod oracle;
pub mod pointer;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result, Violation};
pub use scalar::Real;

pub type ComplexMatrix64 = hilbert::ComplexMatrix<f64>;
pub type ComplexMatrix32 = hilbert::ComplexMatrix<f32>;
pub type JointState64 = hilbert::JointState<f64>;
pub type JointState32 = hilbert::JointState<f32>;
pub type DensityOperator64 = hilbert::DensityOperator<f64>;
pub type DensityOperator32 = hilbert::DensityOperator<f32>;
pub type Complex64 = num_complex::Complex<f64>;
