use nalgebra::{DMatrix, DVector};

use super::admm::{solve_l1, L1Problem, Penalty};
use super::{SolverOptions, SolverResult};
use crate::{Error, Result, Scalar};

/// `min ‖x‖₁ s.t. ‖y − Mx‖₂ ≤ ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocL1Problem<T: Scalar = f64> {
    pub matrix: DMatrix<T>,
    pub y: DVector<T>,
    pub epsilon: f64,
}

impl<T: Scalar> SocL1Problem<T> {
    pub fn new(matrix: DMatrix<T>, y: DVector<T>, epsilon: f64) -> Result<Self> {
        let p = Self { matrix, y, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        validate_parts(&self.matrix, &self.y, self.epsilon)
    }
}

pub(crate) fn validate_parts<T: Scalar>(matrix: &DMatrix<T>, y: &DVector<T>, epsilon: f64) -> Result<()> {
    if matrix.nrows() == 0 || matrix.ncols() == 0 {
        return Err(Error::invalid("sensing matrix must be non-empty"));
    }
    if matrix.nrows() != y.len() {
        return Err(Error::invalid(format!(
            "matrix has {} rows but y has length {}",
            matrix.nrows(),
            y.len()
        )));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!(
            "epsilon must be finite and >= 0, got {epsilon}"
        )));
    }
    if matrix.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix and measurements must be finite"));
    }
    Ok(())
}

pub fn solve_socl1<T: Scalar>(problem: &SocL1Problem<T>, opts: &SolverOptions) -> Result<SolverResult<T>> {
    problem.validate()?;
    opts.validate()?;
    let p = L1Problem {
        d: &problem.matrix,
        y: &problem.y,
        eps: problem.epsilon,
        penalty: Penalty::L1,
    };
    Ok(solve_l1(&p, opts, None).0)
}
