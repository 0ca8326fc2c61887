use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::model::{best_k_term, largest_indices, GroundTruth};
use crate::recovery::RecoveryResult;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// `‖x̂ − x°‖₂`.
    pub signal_err: f64,
    /// `‖(β̂ − β°)⊙xᵏ‖₂` with `xᵏ` the best k-term approximation of `x°`.
    pub beta_err: f64,
    /// Fraction of the `k` largest entries of `x̂` lying on `supp(xᵏ)`.
    pub support_match: f64,
}

pub fn error_metrics<T: Scalar>(gt: &GroundTruth<T>, res: &RecoveryResult<T>, k: usize) -> Result<ErrorMetrics> {
    let n = gt.x_o.len();
    if res.x_hat.len() != n || res.beta_hat.len() != n || gt.beta_o.len() != n {
        return Err(Error::invalid("recovery and ground truth lengths differ"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must lie in 1..={n}, got {k}")));
    }
    let xk = best_k_term(&gt.x_o, k)?;
    let signal_err = (&res.x_hat - &gt.x_o).norm();
    let weighted = DVector::from_iterator(n, (0..n).map(|j| (res.beta_hat[j] - gt.beta_o[j]) * xk[j].modulus()));
    let truth = largest_indices(&xk, k);
    let truth: Vec<usize> = truth.into_iter().filter(|&j| !xk[j].is_zero()).collect();
    let found = largest_indices(&res.x_hat, k);
    let hits = found.iter().filter(|j| truth.contains(j)).count();
    Ok(ErrorMetrics {
        signal_err,
        beta_err: weighted.norm(),
        support_match: hits as f64 / k as f64,
    })
}
