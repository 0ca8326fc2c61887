//! Sparse recovery when the sensing matrix carries a structured perturbation
//! `Φ = A + B·diag(β)` with `A`, `B` known and `β ∈ [−r, r]ⁿ` unknown.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] generates ensembles, signals, perturbations and noise, and
//!   evaluates the perturbed observation model.
//! * [`solvers`] holds the convex primitives every strategy reduces to:
//!   ℓ1 minimisation under an ℓ2 residual ball, box-constrained least squares,
//!   and the two cone programs used for positive signals and the convex
//!   relaxation.
//! * [`recovery`] maps `(ensemble, y, ε)` to a [`recovery::RecoveryResult`] for
//!   every named strategy, including the alternating algorithm.
//! * [`analysis`] computes restricted isometry constants by enumeration,
//!   threshold checks, bound constants and error metrics.
//! * [`doa`] builds the off-grid direction-of-arrival model on a uniform
//!   linear array.
//! * [`harness`] runs seeded Monte Carlo experiments and exports results.
//!
//! Matrix and vector entries are generic over [`Scalar`], implemented for
//! `f64` and `Complex<f64>`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod doa;
mod error;
pub mod exec;
pub mod harness;
pub mod io;
pub mod model;
pub mod recovery;
pub mod report;
pub mod rng;
mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use exec::Execution;
pub use nalgebra::{Complex, DMatrix, DVector};
pub use scalar::Scalar;

/// Complex double-precision scalar used by the DOA front end.
pub type C64 = Complex<f64>;
