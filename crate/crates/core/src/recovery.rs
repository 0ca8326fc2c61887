//! Recovery strategies for `y = (A + B·diag(β))x + e`.
//!
//! | strategy  | solves                                                        |
//! |-----------|---------------------------------------------------------------|
//! | `oracle`  | ℓ1 recovery with the true `Φ(β°)` (not available in practice) |
//! | `nominal` | ℓ1 recovery on `A` with the slack widened by `‖B·diag(β°)x°‖` |
//! | `tps`     | ℓ1 recovery of `[x; β⊙x]` on `[A, B]`                          |
//! | `aa`      | alternating minimisation over `x` and `β`                     |
//! | `pp`      | positive signals, through the convex `(x, p)` program         |
//! | `relax`   | convex relaxation with a complementarity check, `aa` fallback |
//!
//! The `tps` estimate of `β` (clamped ratio of the two blocks) is an addition
//! of this crate; the transformation itself recovers only `x`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::model::{l1_norm, GroundTruth, SensingEnsemble};
use crate::solvers::{
    solve_box_ls_from, solve_pos_p1, solve_relaxed, solve_socl1, BoxLsProblem, SocL1Problem, SolveStatus, SolverOptions,
};
use crate::solvers::{solve_l1, L1Problem, Penalty, WarmStart};
use crate::{Error, Result, Scalar};

/// Complementarity defect below which a relaxation optimum is mapped back.
pub const COMPLEMENTARITY_TOL: f64 = 1e-8;

/// Relative threshold (times `‖x̂‖∞`) for treating an entry as on the support
/// when extracting `β̂`.
pub const SUPPORT_TOL_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Oracle,
    Nominal,
    Tps,
    Aa,
    Pp,
    Relax,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Oracle,
        Strategy::Nominal,
        Strategy::Tps,
        Strategy::Aa,
        Strategy::Pp,
        Strategy::Relax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Oracle => "oracle",
            Strategy::Nominal => "nominal",
            Strategy::Tps => "tps",
            Strategy::Aa => "aa",
            Strategy::Pp => "pp",
            Strategy::Relax => "relax",
        }
    }

    /// Strategies that need a real field.
    pub fn real_only(self) -> bool {
        matches!(self, Strategy::Pp | Strategy::Relax)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult<T: Scalar = f64> {
    pub x_hat: DVector<T>,
    pub beta_hat: DVector<f64>,
    /// `‖x⁽ʲ⁾‖₁` per outer iteration; a single entry for one-shot strategies.
    pub l1_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub strategy: Strategy,
    /// Worst status among the inner solves.
    pub status: SolveStatus,
    /// `relax` only: the relaxation was not complementary and `aa` was used.
    pub fallback: bool,
    /// `relax` only: `max_j min(x₊_j, x₋_j)`.
    pub complementarity_defect: Option<f64>,
}

impl<T: Scalar> RecoveryResult<T> {
    fn single(strategy: Strategy, x_hat: DVector<T>, beta_hat: DVector<f64>, status: SolveStatus) -> Self {
        Self {
            l1_trace: vec![l1_norm(&x_hat)],
            x_hat,
            beta_hat,
            iterations: 1,
            converged: status == SolveStatus::Optimal,
            strategy,
            status,
            fallback: false,
            complementarity_defect: None,
        }
    }

    pub fn l1(&self) -> f64 {
        l1_norm(&self.x_hat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AaOptions {
    pub rel_change_tol: f64,
    pub max_outer_iter: usize,
    pub inner: SolverOptions,
}

impl Default for AaOptions {
    fn default() -> Self {
        Self {
            rel_change_tol: 1e-6,
            max_outer_iter: 200,
            inner: SolverOptions::default(),
        }
    }
}

impl AaOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_change_tol > 0.0) || self.max_outer_iter == 0 {
            return Err(Error::invalid(format!(
                "alternating tolerance and iteration budget must be positive ({self:?})"
            )));
        }
        self.inner.validate()
    }
}

fn worst(a: SolveStatus, b: SolveStatus) -> SolveStatus {
    use SolveStatus::*;
    match (a, b) {
        (Infeasible, _) | (_, Infeasible) => Infeasible,
        (MaxIter, _) | (_, MaxIter) => MaxIter,
        _ => Optimal,
    }
}

fn check_y<T: Scalar>(ens: &SensingEnsemble<T>, y: &DVector<T>, epsilon: f64) -> Result<()> {
    if y.len() != ens.m() {
        return Err(Error::invalid(format!("y has length {} but m = {}", y.len(), ens.m())));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!(
            "epsilon must be finite and >= 0, got {epsilon}"
        )));
    }
    Ok(())
}

/// `β̂_j = clamp(ratio_j, −r, r)` where `|x̂_j| > support_tol`, else 0.
fn extract_beta<T: Scalar>(x: &DVector<T>, numer: &DVector<T>, r: f64) -> DVector<f64> {
    let tol = SUPPORT_TOL_REL * x.camax();
    DVector::from_iterator(
        x.len(),
        x.iter().zip(numer.iter()).map(|(&xj, &pj)| {
            if xj.modulus() > tol && !xj.is_zero() {
                let ratio = (pj / xj).re();
                if ratio.is_finite() {
                    ratio.clamp(-r, r)
                } else {
                    0.0
                }
            } else {
                0.0
            }
        }),
    )
}

pub fn recover_oracle_bpdn<T: Scalar>(
    ens: &SensingEnsemble<T>,
    gt: &GroundTruth<T>,
    y: &DVector<T>,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<RecoveryResult<T>> {
    check_y(ens, y, epsilon)?;
    if gt.beta_o.len() != ens.n() {
        return Err(Error::invalid("ground-truth perturbation length differs from n"));
    }
    let out = solve_socl1(&SocL1Problem::new(ens.phi(&gt.beta_o), y.clone(), epsilon)?, opts)?;
    Ok(RecoveryResult::single(
        Strategy::Oracle,
        out.x,
        gt.beta_o.clone(),
        out.info.status,
    ))
}

pub fn recover_nominal_bpdn<T: Scalar>(
    ens: &SensingEnsemble<T>,
    y: &DVector<T>,
    epsilon: f64,
    eps_mult: f64,
    opts: &SolverOptions,
) -> Result<RecoveryResult<T>> {
    check_y(ens, y, epsilon)?;
    if !(eps_mult >= 0.0) || !eps_mult.is_finite() {
        return Err(Error::invalid(format!(
            "eps_mult must be finite and >= 0, got {eps_mult}"
        )));
    }
    let out = solve_socl1(
        &SocL1Problem::new(ens.a().clone(), y.clone(), epsilon + eps_mult)?,
        opts,
    )?;
    let n = ens.n();
    Ok(RecoveryResult::single(
        Strategy::Nominal,
        out.x,
        DVector::zeros(n),
        out.info.status,
    ))
}

pub fn recover_tps_bpdn<T: Scalar>(
    ens: &SensingEnsemble<T>,
    y: &DVector<T>,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<RecoveryResult<T>> {
    check_y(ens, y, epsilon)?;
    let n = ens.n();
    let out = solve_socl1(&SocL1Problem::new(ens.psi(), y.clone(), epsilon)?, opts)?;
    let x = out.x.rows(0, n).into_owned();
    let p = out.x.rows(n, n).into_owned();
    let beta = extract_beta(&x, &p, ens.r());
    Ok(RecoveryResult::single(Strategy::Tps, x, beta, out.info.status))
}

/// `G = B·diag(x)`, `c = y − Ax`.
fn beta_step_problem<T: Scalar>(ens: &SensingEnsemble<T>, y: &DVector<T>, x: &DVector<T>) -> BoxLsProblem<T> {
    let mut g: DMatrix<T> = ens.b().clone();
    for (j, mut col) in g.column_iter_mut().enumerate() {
        col *= x[j];
    }
    BoxLsProblem {
        g,
        c: y - ens.a() * x,
        r: ens.r(),
    }
}

fn x_step<T: Scalar>(
    ens: &SensingEnsemble<T>,
    y: &DVector<T>,
    epsilon: f64,
    beta: &DVector<f64>,
    opts: &SolverOptions,
    warm: Option<&WarmStart<T>>,
) -> (crate::solvers::SolverResult<T>, WarmStart<T>) {
    let phi = ens.phi(beta);
    let p = L1Problem {
        d: &phi,
        y,
        eps: epsilon,
        penalty: Penalty::L1,
    };
    solve_l1(&p, opts, warm)
}

pub fn recover_aa_p_bpdn<T: Scalar>(
    ens: &SensingEnsemble<T>,
    y: &DVector<T>,
    epsilon: f64,
    aopts: &AaOptions,
) -> Result<RecoveryResult<T>> {
    check_y(ens, y, epsilon)?;
    aopts.validate()?;
    let n = ens.n();
    let mut beta = DVector::zeros(n);
    let (first, mut warm) = x_step(ens, y, epsilon, &beta, &aopts.inner, None);
    let mut status = first.info.status;
    let mut x = first.x;
    let mut l1 = l1_norm(&x);
    let mut res = RecoveryResult {
        x_hat: DVector::zeros(n),
        beta_hat: DVector::zeros(n),
        l1_trace: vec![l1],
        iterations: 1,
        converged: false,
        strategy: Strategy::Aa,
        status,
        fallback: false,
        complementarity_defect: None,
    };
    if status == SolveStatus::Infeasible {
        res.x_hat = x;
        return Ok(res);
    }
    if ens.r() == 0.0 || l1 == 0.0 {
        res.x_hat = x;
        res.converged = status == SolveStatus::Optimal;
        return Ok(res);
    }

    while res.iterations < aopts.max_outer_iter {
        let bp = beta_step_problem(ens, y, &x);
        let step = solve_box_ls_from(&bp, &beta, &aopts.inner)?;
        status = worst(status, step.info.status);
        beta = step.x;

        let (next, w) = x_step(ens, y, epsilon, &beta, &aopts.inner, Some(&warm));
        warm = w;
        res.iterations += 1;
        let prev = l1;
        let next_l1 = l1_norm(&next.x);
        if next.info.status != SolveStatus::Infeasible && next_l1 <= prev {
            status = worst(status, next.info.status);
            x = next.x;
            l1 = next_l1;
        }
        res.l1_trace.push(l1);
        if l1 == 0.0 || (prev - l1).abs() / prev <= aopts.rel_change_tol {
            res.converged = true;
            break;
        }
    }
    res.x_hat = x;
    res.beta_hat = beta;
    res.status = status;
    Ok(res)
}

pub fn recover_pp_bpdn(
    ens: &SensingEnsemble<f64>,
    y: &DVector<f64>,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<RecoveryResult<f64>> {
    check_y(ens, y, epsilon)?;
    let out = solve_pos_p1(ens, y, epsilon, opts)?;
    let beta = extract_beta(&out.x, &out.p, ens.r());
    Ok(RecoveryResult::single(Strategy::Pp, out.x, beta, out.info.status))
}

pub fn recover_relax_check(
    ens: &SensingEnsemble<f64>,
    y: &DVector<f64>,
    epsilon: f64,
    aopts: &AaOptions,
) -> Result<RecoveryResult<f64>> {
    check_y(ens, y, epsilon)?;
    aopts.validate()?;
    let out = solve_relaxed(ens, y, epsilon, &aopts.inner)?;
    let defect = out.complementarity_defect();
    if defect <= COMPLEMENTARITY_TOL && out.info.status != SolveStatus::Infeasible {
        let x = out.x();
        let beta = extract_beta(&x, &out.p, ens.r());
        let mut res = RecoveryResult::single(Strategy::Relax, x, beta, out.info.status);
        res.complementarity_defect = Some(defect);
        return Ok(res);
    }
    let mut res = recover_aa_p_bpdn(ens, y, epsilon, aopts)?;
    res.strategy = Strategy::Relax;
    res.fallback = true;
    res.complementarity_defect = Some(defect);
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Effectiveness {
    pub effective: bool,
    /// `‖x̂‖₁ − ‖x°‖₁`.
    pub l1_gap: f64,
    /// `ε − ‖y − Φ(β̂)x̂‖₂`.
    pub feasibility_slack: f64,
}

/// The recovered pair is feasible and no larger in ℓ1 than the truth.
pub fn effectiveness_check<T: Scalar>(
    result: &RecoveryResult<T>,
    ens: &SensingEnsemble<T>,
    y: &DVector<T>,
    epsilon: f64,
    x_o: &DVector<T>,
) -> Result<Effectiveness> {
    check_y(ens, y, epsilon)?;
    if result.x_hat.len() != ens.n() || x_o.len() != ens.n() || result.beta_hat.len() != ens.n() {
        return Err(Error::invalid("vector lengths differ from n"));
    }
    let residual = (y - ens.phi(&result.beta_hat) * &result.x_hat).norm();
    let l1_gap = result.l1() - l1_norm(x_o);
    let feasible = residual <= epsilon * (1.0 + 1e-6) + 1e-9;
    Ok(Effectiveness {
        effective: feasible && l1_gap <= 1e-9,
        l1_gap,
        feasibility_slack: epsilon - residual,
    })
}

/// Relative ℓ1 change after one more β-step and x-step from the returned pair.
pub fn stationarity_gap<T: Scalar>(
    result: &RecoveryResult<T>,
    ens: &SensingEnsemble<T>,
    y: &DVector<T>,
    epsilon: f64,
    aopts: &AaOptions,
) -> Result<f64> {
    check_y(ens, y, epsilon)?;
    let l1 = result.l1();
    if l1 == 0.0 {
        return Ok(0.0);
    }
    let bp = beta_step_problem(ens, y, &result.x_hat);
    let beta = solve_box_ls_from(&bp, &result.beta_hat, &aopts.inner)?.x;
    let (next, _) = x_step(ens, y, epsilon, &beta, &aopts.inner, None);
    Ok((l1_norm(&next.x) - l1).abs() / l1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("bpdn".parse::<Strategy>().is_err());
    }

    #[test]
    fn beta_extraction_ignores_tiny_entries() {
        let x = DVector::from_vec(vec![1.0, 1e-9, 0.0, -2.0]);
        let p = DVector::from_vec(vec![0.05, 1e-9, 0.3, 1.0]);
        let b = extract_beta(&x, &p, 0.1);
        assert_eq!(b.as_slice(), &[0.05, 0.0, 0.0, -0.1]);
    }
}
