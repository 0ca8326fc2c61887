//! Closed-form finish on a fixed support.
//!
//! On a support `S` with unit phases `u` (signs for ℝ, all ones for the
//! nonnegative penalty), the ℓ1 problem restricted to `S` is minimising the
//! linear form `Re(uᴴx)` over the ellipsoid `‖y − M_S x‖ ≤ ε`, whose solution is
//!
//! ```text
//! x = x_ls − t·G⁻¹u,   t = sqrt((ε² − ‖r_ls‖²) / uᴴG⁻¹u),   G = M_Sᴴ M_S,
//! ```
//!
//! with multiplier `λ = (y − M_S x)/t`. For complex data the phases are
//! iterated to a fixed point `u = x/|x|`. The candidate is accepted when the
//! phases are consistent and `λ` is dual feasible off the support.

use nalgebra::{DMatrix, DVector};

use super::admm::Penalty;
use crate::Scalar;

pub(crate) struct Polished<T> {
    pub x: DVector<T>,
    pub dual_violation: f64,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn polish<T: Scalar>(
    d: &DMatrix<T>,
    y: &DVector<T>,
    eps: f64,
    penalty: Penalty,
    support: &[usize],
    z: &DVector<T>,
    lambda0: Option<&DVector<T>>,
    kkt_tol: f64,
) -> Option<Polished<T>> {
    let m = d.nrows();
    if support.is_empty() || support.len() > m {
        return None;
    }
    let ds = d.select_columns(support.iter());
    let chol = ds.ad_mul(&ds).cholesky()?;
    let x_ls = chol.solve(&ds.ad_mul(y));
    let r_ls = y - &ds * &x_ls;
    let y_scale = y.norm().max(1.0);

    let mut u: DVector<T> = match penalty {
        Penalty::L1 => DVector::from_iterator(support.len(), support.iter().map(|&j| z[j].unit())),
        Penalty::NonNeg => DVector::from_element(support.len(), T::one()),
    };
    if u.iter().any(|v| v.is_zero()) {
        return None;
    }

    let (xs, lambda) = if eps == 0.0 {
        if r_ls.norm() > 1e-10 * y_scale {
            return None;
        }
        let xs = x_ls;
        if !phases_match(&xs, &mut u, penalty) {
            return None;
        }
        let lambda0 = match lambda0 {
            Some(l) => l.clone(),
            None => DVector::zeros(m),
        };
        let gap = &u - ds.ad_mul(&lambda0);
        let lambda = lambda0 + &ds * chol.solve(&gap);
        (xs, lambda)
    } else {
        let slack = eps * eps - r_ls.norm_squared();
        if slack <= 0.0 {
            return None;
        }
        let mut settled = None;
        for _ in 0..200 {
            let q = chol.solve(&u);
            let gamma = u.dotc(&q).re();
            if !(gamma > 0.0) {
                return None;
            }
            let t = (slack / gamma).sqrt();
            let xs = &x_ls - q * T::from_real(t);
            let before = u.clone();
            if !phases_match(&xs, &mut u, penalty) {
                return None;
            }
            if (&u - &before).camax() <= 1e-14 {
                settled = Some((xs, t));
                break;
            }
        }
        let (xs, t) = settled?;
        let lambda = (y - &ds * &xs).unscale(t);
        (xs, lambda)
    };

    let corr = d.ad_mul(&lambda);
    let mut violation: f64 = 0.0;
    let mut on_support = vec![false; d.ncols()];
    for (pos, &j) in support.iter().enumerate() {
        on_support[j] = true;
        violation = violation.max((corr[j] - u[pos]).modulus());
    }
    for (j, c) in corr.iter().enumerate() {
        if on_support[j] {
            continue;
        }
        let excess = match penalty {
            Penalty::L1 => c.modulus() - 1.0,
            Penalty::NonNeg => c.re() - 1.0,
        };
        violation = violation.max(excess);
    }
    if violation > kkt_tol {
        return None;
    }

    let mut x = DVector::zeros(d.ncols());
    for (pos, &j) in support.iter().enumerate() {
        x[j] = xs[pos];
    }
    let residual = (y - d * &x).norm();
    if residual > eps + 1e-10 * y_scale {
        return None;
    }
    Some(Polished {
        x,
        dual_violation: violation.max(0.0),
    })
}

/// Updates `u` to the phases of `xs`; false if an entry vanished or, for the
/// nonnegative penalty, left the orthant.
fn phases_match<T: Scalar>(xs: &DVector<T>, u: &mut DVector<T>, penalty: Penalty) -> bool {
    for (ui, &xi) in u.iter_mut().zip(xs.iter()) {
        match penalty {
            Penalty::NonNeg => {
                if !(xi.re() > 0.0) {
                    return false;
                }
            }
            Penalty::L1 => {
                if xi.is_zero() {
                    return false;
                }
                *ui = xi.unit();
            }
        }
    }
    true
}
