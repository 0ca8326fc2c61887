//! Over-relaxed ADMM for `min P(x) s.t. ‖y − Dx‖₂ ≤ ε` with
//! `P = ‖·‖₁` or `P = 1ᵀx + ι(x ≥ 0)`.
//!
//! Graph form splits `x` into `w = z` and `Dw = v`; the `w`-update solves
//! `(I + DᴴD)w = z − u + Dᴴ(v − s)` with a factorization computed once, so the
//! penalty can be rebalanced at no cost. When `ε = 0` and `D` has full row
//! rank the `w`-update is the projection onto `{Dw = y}` instead.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::polish::polish;
use super::{SolveInfo, SolveStatus, SolverOptions, SolverResult};
use crate::Scalar;

const ALPHA: f64 = 1.6;
const CHECK_EVERY: usize = 10;
const POLISH_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Penalty {
    L1,
    NonNeg,
}

pub(crate) struct L1Problem<'a, T: Scalar> {
    pub d: &'a DMatrix<T>,
    pub y: &'a DVector<T>,
    pub eps: f64,
    pub penalty: Penalty,
}

/// ADMM state carried between related solves.
#[derive(Debug, Clone)]
pub(crate) struct WarmStart<T: Scalar> {
    pub z: DVector<T>,
    pub u: DVector<T>,
    pub v: DVector<T>,
    pub s: DVector<T>,
    pub rho: f64,
}

impl<T: Scalar> WarmStart<T> {
    fn cold(m: usize, n: usize) -> Self {
        Self {
            z: DVector::zeros(n),
            u: DVector::zeros(n),
            v: DVector::zeros(m),
            s: DVector::zeros(m),
            rho: 1.0,
        }
    }

    fn fits(&self, m: usize, n: usize) -> bool {
        self.z.len() == n && self.u.len() == n && self.v.len() == m && self.s.len() == m && self.rho > 0.0
    }
}

/// Cholesky factor that refuses numerically singular input.
pub(crate) fn robust_cholesky<T: Scalar>(g: DMatrix<T>) -> Option<Cholesky<T, Dyn>> {
    let scale = g.diagonal().iter().map(|v| v.re()).fold(0.0_f64, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let chol = g.cholesky()?;
    let min_pivot = chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|v| v.re())
        .fold(f64::INFINITY, f64::min);
    (min_pivot * min_pivot >= 1e-13 * scale).then_some(chol)
}

/// `‖y − Π_range(D) y‖`, computed from the SVD.
fn range_distance<T: Scalar>(d: &DMatrix<T>, y: &DVector<T>) -> f64 {
    let svd = d.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let tol = smax * (d.nrows().max(d.ncols()) as f64) * f64::EPSILON * 10.0;
    let mut proj = DVector::zeros(y.len());
    for (i, sv) in svd.singular_values.iter().enumerate() {
        if *sv > tol {
            let col = u.column(i);
            proj += col * col.dotc(y);
        }
    }
    (y - proj).norm()
}

pub(crate) fn objective<T: Scalar>(x: &DVector<T>, penalty: Penalty) -> f64 {
    match penalty {
        Penalty::L1 => x.iter().map(|v| v.modulus()).sum(),
        Penalty::NonNeg => x.iter().map(|v| v.re()).sum(),
    }
}

fn prox<T: Scalar>(a: T, tau: f64, penalty: Penalty) -> T {
    match penalty {
        Penalty::L1 => {
            let mag = a.modulus();
            if mag <= tau {
                T::zero()
            } else {
                a.scale(1.0 - tau / mag)
            }
        }
        Penalty::NonNeg => T::from_real((a.re() - tau).max(0.0)),
    }
}

fn project_ball<T: Scalar>(a: &mut DVector<T>, y: &DVector<T>, eps: f64) {
    *a -= y;
    let nd = a.norm();
    if nd > eps {
        a.scale_mut(eps / nd);
    }
    *a += y;
}

fn support_of<T: Scalar>(z: &DVector<T>, rel: f64) -> Vec<usize> {
    let cut = z.camax() * rel;
    z.iter()
        .enumerate()
        .filter(|(_, v)| v.modulus() > cut && !v.is_zero())
        .map(|(j, _)| j)
        .collect()
}

struct Finish<T> {
    x: DVector<T>,
    violation: f64,
}

/// Tries the closed-form finish on the exact and on a thresholded support.
fn try_polish<T: Scalar>(
    p: &L1Problem<T>,
    z: &DVector<T>,
    lambda0: Option<&DVector<T>>,
    kkt_tol: f64,
    tried: &mut Vec<Vec<usize>>,
) -> Option<Finish<T>> {
    for rel in [0.0, 1e-6, 1e-3] {
        let supp = support_of(z, rel);
        if supp.is_empty() || supp.len() > p.d.nrows() || tried.contains(&supp) {
            continue;
        }
        if let Some(done) = polish(p.d, p.y, p.eps, p.penalty, &supp, z, lambda0, kkt_tol) {
            return Some(Finish {
                x: done.x,
                violation: done.dual_violation,
            });
        }
        if tried.len() >= 8 {
            tried.remove(0);
        }
        tried.push(supp);
    }
    None
}

fn result<T: Scalar>(
    p: &L1Problem<T>,
    x: DVector<T>,
    status: SolveStatus,
    iterations: usize,
    kkt_residual: f64,
    polished: bool,
) -> SolverResult<T> {
    let residual_norm = (p.y - p.d * &x).norm();
    SolverResult {
        info: SolveInfo {
            status,
            objective: objective(&x, p.penalty),
            residual_norm,
            iterations,
            kkt_residual,
            polished,
        },
        x,
    }
}

enum Mode<T: Scalar> {
    /// `(I + DDᴴ)` factor, `w`-update by Woodbury.
    Fat(Cholesky<T, Dyn>),
    /// `(I + DᴴD)` factor.
    Tall(Cholesky<T, Dyn>),
    /// `DDᴴ` factor for the affine projection.
    Equality(Cholesky<T, Dyn>),
}

pub(crate) fn solve_l1<T: Scalar>(
    p: &L1Problem<T>,
    opts: &SolverOptions,
    warm: Option<&WarmStart<T>>,
) -> (SolverResult<T>, WarmStart<T>) {
    let (m, n) = p.d.shape();
    let ynorm = p.y.norm();
    let kkt_tol = opts.kkt_tol();
    let mut state = match warm {
        Some(w) if w.fits(m, n) => w.clone(),
        _ => WarmStart::cold(m, n),
    };

    if ynorm <= p.eps {
        let x = DVector::zeros(n);
        return (result(p, x, SolveStatus::Optimal, 0, 0.0, true), WarmStart::cold(m, n));
    }

    let fat = n > m;
    let small_gram = if fat { p.d * p.d.adjoint() } else { p.d.ad_mul(p.d) };
    let gram_chol = robust_cholesky(small_gram.clone());

    let dist = match (&gram_chol, fat) {
        (Some(_), true) => 0.0,
        (Some(ch), false) => (p.y - p.d * ch.solve(&p.d.ad_mul(p.y))).norm(),
        (None, _) => range_distance(p.d, p.y),
    };
    if dist > p.eps + 10.0 * opts.abs_tol {
        let x = DVector::zeros(n);
        return (result(p, x, SolveStatus::Infeasible, 0, dist, false), state);
    }

    if p.eps == 0.0 && !fat {
        if let Some(ch) = &gram_chol {
            // full column rank: the feasible set is a single point
            let x = ch.solve(&p.d.ad_mul(p.y));
            let tol = 10.0 * opts.abs_tol * x.camax().max(1.0);
            if p.penalty == Penalty::NonNeg && x.iter().any(|v| v.re() < -tol) {
                return (result(p, x, SolveStatus::Infeasible, 0, dist, false), state);
            }
            let x = match p.penalty {
                Penalty::NonNeg => x.map(|v| T::from_real(v.re().max(0.0))),
                Penalty::L1 => x,
            };
            return (result(p, x, SolveStatus::Optimal, 0, 0.0, true), state);
        }
    }

    let mode = match gram_chol {
        Some(ch) if p.eps == 0.0 && fat => Mode::Equality(ch),
        _ => {
            let mut shifted = small_gram;
            for i in 0..shifted.nrows() {
                shifted[(i, i)] += T::one();
            }
            let ch = shifted.cholesky().expect("identity shift is positive definite");
            if fat {
                Mode::Fat(ch)
            } else {
                Mode::Tall(ch)
            }
        }
    };

    match mode {
        Mode::Equality(ch) => equality_loop(p, opts, ch, state, kkt_tol),
        Mode::Fat(ch) => graph_loop(p, opts, ch, true, state, kkt_tol),
        Mode::Tall(ch) => {
            state.v.copy_from(p.y);
            graph_loop(p, opts, ch, false, state, kkt_tol)
        }
    }
}

fn graph_loop<T: Scalar>(
    p: &L1Problem<T>,
    opts: &SolverOptions,
    chol: Cholesky<T, Dyn>,
    woodbury: bool,
    mut st: WarmStart<T>,
    kkt_tol: f64,
) -> (SolverResult<T>, WarmStart<T>) {
    let (m, n) = p.d.shape();
    let d = p.d;
    let a = T::from_real(ALPHA);
    let a1 = T::from_real(1.0 - ALPHA);
    let mut q = DVector::zeros(n);
    let mut w = DVector::zeros(n);
    let mut dw = DVector::zeros(m);
    let mut tmp_m = DVector::zeros(m);
    let mut h1 = DVector::zeros(n);
    let mut h2 = DVector::zeros(m);
    let mut z_old = st.z.clone();
    let mut v_old = st.v.clone();
    let mut tried = Vec::new();
    let mut last_res = f64::INFINITY;
    let mut converged = false;
    let mut iter = 0;
    let scale_n = (n as f64).sqrt();
    let scale_nm = ((n + m) as f64).sqrt();

    while iter < opts.max_iter {
        iter += 1;
        tmp_m.copy_from(&st.v);
        tmp_m -= &st.s;
        q.copy_from(&st.z);
        q -= &st.u;
        q.gemv_ad(T::one(), d, &tmp_m, T::one());
        if woodbury {
            dw.gemv(T::one(), d, &q, T::zero());
            chol.solve_mut(&mut dw);
            w.copy_from(&q);
            w.gemv_ad(-T::one(), d, &dw, T::one());
        } else {
            w.copy_from(&q);
            chol.solve_mut(&mut w);
            dw.gemv(T::one(), d, &w, T::zero());
        }

        h1.copy_from(&st.z);
        h1 *= a1;
        h1.axpy(a, &w, T::one());
        h2.copy_from(&st.v);
        h2 *= a1;
        h2.axpy(a, &dw, T::one());

        z_old.copy_from(&st.z);
        v_old.copy_from(&st.v);
        let tau = 1.0 / st.rho;
        for j in 0..n {
            st.z[j] = prox(h1[j] + st.u[j], tau, p.penalty);
        }
        st.v.copy_from(&h2);
        st.v += &st.s;
        project_ball(&mut st.v, p.y, p.eps);
        st.u += &h1;
        st.u -= &st.z;
        st.s += &h2;
        st.s -= &st.v;

        if iter % POLISH_EVERY == 0 {
            let lambda0 = (p.eps == 0.0).then(|| st.s.scale(-st.rho));
            if let Some(done) = try_polish(p, &st.z, lambda0.as_ref(), kkt_tol, &mut tried) {
                let out = result(p, done.x, SolveStatus::Optimal, iter, done.violation, true);
                return (out, st);
            }
        }

        if iter % CHECK_EVERY == 0 || iter == opts.max_iter {
            let rp = ((&w - &st.z).norm_squared() + (&dw - &st.v).norm_squared()).sqrt();
            tmp_m.copy_from(&st.v);
            tmp_m -= &v_old;
            let mut dz = &st.z - &z_old;
            dz.gemv_ad(T::one(), d, &tmp_m, T::one());
            let rd = st.rho * dz.norm();
            let primal_scale = (w.norm_squared() + dw.norm_squared())
                .sqrt()
                .max((st.z.norm_squared() + st.v.norm_squared()).sqrt());
            let mut dual = st.u.clone();
            dual.gemv_ad(T::one(), d, &st.s, T::zero());
            let dual_scale = st.rho * st.u.norm().max(dual.norm());
            let eps_pri = scale_nm * opts.abs_tol + opts.rel_tol * primal_scale;
            let eps_dual = scale_n * opts.abs_tol + opts.rel_tol * dual_scale;
            last_res = rp.max(rd);
            if rp <= eps_pri && rd <= eps_dual {
                converged = true;
                break;
            }
            rebalance(&mut st, rp / primal_scale.max(1e-30), rd / dual_scale.max(1e-30));
        }
    }

    let lambda0 = (p.eps == 0.0).then(|| st.s.scale(-st.rho));
    tried.clear();
    if let Some(done) = try_polish(p, &st.z, lambda0.as_ref(), kkt_tol, &mut tried) {
        return (result(p, done.x, SolveStatus::Optimal, iter, done.violation, true), st);
    }
    let status = if converged {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIter
    };
    (result(p, st.z.clone(), status, iter, last_res, false), st)
}

fn equality_loop<T: Scalar>(
    p: &L1Problem<T>,
    opts: &SolverOptions,
    chol: Cholesky<T, Dyn>,
    mut st: WarmStart<T>,
    kkt_tol: f64,
) -> (SolverResult<T>, WarmStart<T>) {
    let (m, n) = p.d.shape();
    let d = p.d;
    let a = T::from_real(ALPHA);
    let a1 = T::from_real(1.0 - ALPHA);
    let mut w = DVector::zeros(n);
    let mut h = DVector::zeros(n);
    let mut tmp_m = DVector::zeros(m);
    let mut z_old = st.z.clone();
    let mut tried = Vec::new();
    let mut last_res = f64::INFINITY;
    let mut converged = false;
    let mut iter = 0;
    let scale_n = (n as f64).sqrt();

    let multiplier = |st: &WarmStart<T>| {
        let mut du = d * &st.u;
        chol.solve_mut(&mut du);
        du.scale(st.rho)
    };

    while iter < opts.max_iter {
        iter += 1;
        w.copy_from(&st.z);
        w -= &st.u;
        tmp_m.copy_from(p.y);
        tmp_m.gemv(T::one(), d, &w, -T::one());
        chol.solve_mut(&mut tmp_m);
        w.gemv_ad(-T::one(), d, &tmp_m, T::one());

        h.copy_from(&st.z);
        h *= a1;
        h.axpy(a, &w, T::one());
        z_old.copy_from(&st.z);
        let tau = 1.0 / st.rho;
        for j in 0..n {
            st.z[j] = prox(h[j] + st.u[j], tau, p.penalty);
        }
        st.u += &h;
        st.u -= &st.z;

        if iter % POLISH_EVERY == 0 {
            let lambda0 = multiplier(&st);
            if let Some(done) = try_polish(p, &st.z, Some(&lambda0), kkt_tol, &mut tried) {
                return (result(p, done.x, SolveStatus::Optimal, iter, done.violation, true), st);
            }
        }

        if iter % CHECK_EVERY == 0 || iter == opts.max_iter {
            let rp = (&w - &st.z).norm();
            let rd = st.rho * (&st.z - &z_old).norm();
            let primal_scale = w.norm().max(st.z.norm());
            let dual_scale = st.rho * st.u.norm();
            let eps_pri = scale_n * opts.abs_tol + opts.rel_tol * primal_scale;
            let eps_dual = scale_n * opts.abs_tol + opts.rel_tol * dual_scale;
            last_res = rp.max(rd);
            if rp <= eps_pri && rd <= eps_dual {
                converged = true;
                break;
            }
            rebalance(&mut st, rp / primal_scale.max(1e-30), rd / dual_scale.max(1e-30));
        }
    }

    let lambda0 = multiplier(&st);
    tried.clear();
    if let Some(done) = try_polish(p, &st.z, Some(&lambda0), kkt_tol, &mut tried) {
        return (result(p, done.x, SolveStatus::Optimal, iter, done.violation, true), st);
    }
    let status = if converged {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIter
    };
    (result(p, st.z.clone(), status, iter, last_res, false), st)
}

/// Residual balancing; the scaled duals are rescaled so the iteration is
/// unchanged apart from the penalty.
fn rebalance<T: Scalar>(st: &mut WarmStart<T>, rp: f64, rd: f64) {
    if !(rp > 0.0 && rd > 0.0) {
        return;
    }
    let ratio = (rp / rd).sqrt();
    if (0.2..5.0).contains(&ratio) {
        return;
    }
    let factor = ratio.clamp(0.01, 100.0);
    let new_rho = (st.rho * factor).clamp(1e-6, 1e6);
    let k = st.rho / new_rho;
    st.u.scale_mut(k);
    st.s.scale_mut(k);
    st.rho = new_rho;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_shrinks_complex_modulus() {
        let a = crate::C64::new(3.0, 4.0);
        let out = prox(a, 1.0, Penalty::L1);
        assert!((out.norm() - 4.0).abs() < 1e-15);
        assert!((out.arg() - a.arg()).abs() < 1e-15);
        assert_eq!(prox(0.5, 1.0, Penalty::L1), 0.0);
        assert_eq!(prox(-2.0, 0.5, Penalty::NonNeg), 0.0);
        assert_eq!(prox(2.0, 0.5, Penalty::NonNeg), 1.5);
    }

    #[test]
    fn ball_projection() {
        let y = DVector::from_vec(vec![1.0, 0.0]);
        let mut a = DVector::from_vec(vec![4.0, 4.0]);
        project_ball(&mut a, &y, 1.0);
        assert!(((&a - &y).norm() - 1.0).abs() < 1e-15);
        let mut inside = DVector::from_vec(vec![1.1, 0.1]);
        project_ball(&mut inside, &y, 1.0);
        assert_eq!(inside, DVector::from_vec(vec![1.1, 0.1]));
    }

    #[test]
    fn rank_deficient_gram_is_rejected() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(robust_cholesky(g).is_none());
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!(robust_cholesky(g).is_some());
    }
}
