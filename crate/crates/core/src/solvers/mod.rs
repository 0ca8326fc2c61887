//! Convex primitives shared by every recovery strategy.
//!
//! * [`solve_socl1`]: `min ‖x‖₁ s.t. ‖y − Mx‖₂ ≤ ε`, over ℝ or ℂ.
//! * [`solve_box_ls`]: `min ‖c − Gβ‖₂ s.t. β ∈ [−r, r]ⁿ`, β real.
//! * [`solve_pos_p1`]: the positive-signal program in `(x, p = β⊙x)`.
//! * [`solve_relaxed`]: the convex relaxation in `(x₊, x₋, p)`.
//!
//! The ℓ1 problems run an over-relaxed ADMM on the graph splitting
//! `w = z, Mw = v` (or projection onto `{Mw = y}` when `ε = 0`), then try to
//! finish on the detected support with a closed-form KKT solve. A solve is
//! reported optimal only when primal feasibility and dual feasibility are
//! verified numerically.

mod admm;
mod box_ls;
mod cone;
mod polish;
mod socl1;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use box_ls::{solve_box_ls, solve_box_ls_from, BoxLsProblem};
pub use cone::{solve_pos_p1, solve_relaxed, P1Result, RelaxedResult};
pub use socl1::{solve_socl1, SocL1Problem};

pub(crate) use admm::{solve_l1, L1Problem, Penalty, WarmStart};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            max_iter: 20_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || self.max_iter == 0 {
            return Err(crate::Error::invalid(format!(
                "solver tolerances and iteration budget must be positive ({self:?})"
            )));
        }
        Ok(())
    }

    /// Tolerance on dual infeasibility for a certified KKT point.
    pub(crate) fn kkt_tol(&self) -> f64 {
        (100.0 * self.abs_tol).max(1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::Infeasible => "infeasible",
        })
    }
}

/// Diagnostics common to all solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    pub status: SolveStatus,
    pub objective: f64,
    /// `‖y − Mx‖₂` at the returned point.
    pub residual_norm: f64,
    pub iterations: usize,
    /// Largest dual-feasibility violation for a certified point, otherwise the
    /// larger of the ADMM primal and dual residuals.
    pub kkt_residual: f64,
    /// Whether the point came from the closed-form support solve.
    pub polished: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult<T> {
    pub x: DVector<T>,
    pub info: SolveInfo,
}

impl<T> SolverResult<T> {
    pub fn status(&self) -> SolveStatus {
        self.info.status
    }
}
