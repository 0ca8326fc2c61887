//! Positive-signal program and convex relaxation.
//!
//! Both feasible sets are images of the nonnegative orthant under a linear
//! map, so both reduce to `min 1ᵀμ s.t. ‖y − Dμ‖₂ ≤ ε, μ ⪰ 0`.
//!
//! * Positive program: `{(x, p): x ⪰ 0, |p| ⪯ r·x}` is generated by
//!   `x = μ₊ + μ₋`, `p = r(μ₊ − μ₋)`, so `D = [A + rB, A − rB]`.
//! * Relaxation: `{(x₊, x₋, p): x± ⪰ 0, |p| ⪯ r(x₊ + x₋)}` is generated by
//!   `x₊ = μ₁ + μ₂`, `x₋ = μ₃ + μ₄`, `p = r(μ₁ − μ₂ + μ₃ − μ₄)`, so
//!   `D = [A + rB, A − rB, −A + rB, −A − rB]`.
//!
//! In both cases `1ᵀμ` equals the original objective.

use nalgebra::{DMatrix, DVector};

use super::admm::{solve_l1, L1Problem, Penalty};
use super::socl1::validate_parts;
use super::{SolveInfo, SolverOptions};
use crate::model::SensingEnsemble;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct P1Result {
    pub x: DVector<f64>,
    pub p: DVector<f64>,
    pub info: SolveInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedResult {
    pub x_plus: DVector<f64>,
    pub x_minus: DVector<f64>,
    pub p: DVector<f64>,
    pub info: SolveInfo,
}

impl RelaxedResult {
    /// `max_j min(x₊_j, x₋_j)`.
    pub fn complementarity_defect(&self) -> f64 {
        self.x_plus
            .iter()
            .zip(self.x_minus.iter())
            .map(|(a, b)| a.min(*b))
            .fold(0.0, f64::max)
    }

    pub fn x(&self) -> DVector<f64> {
        &self.x_plus - &self.x_minus
    }
}

fn generators(ens: &SensingEnsemble<f64>, signs: &[(f64, f64)]) -> DMatrix<f64> {
    let (m, n) = (ens.m(), ens.n());
    let r = ens.r();
    let mut d = DMatrix::zeros(m, n * signs.len());
    for (blk, &(sa, sb)) in signs.iter().enumerate() {
        let mut view = d.columns_mut(blk * n, n);
        view.copy_from(ens.a());
        view *= sa;
        if sb != 0.0 {
            view += ens.b() * (sb * r);
        }
    }
    d
}

fn check(ens: &SensingEnsemble<f64>, y: &DVector<f64>, epsilon: f64, opts: &SolverOptions) -> Result<()> {
    opts.validate()?;
    validate_parts(ens.a(), y, epsilon).map_err(|e| Error::invalid(e.to_string()))
}

pub fn solve_pos_p1(
    ens: &SensingEnsemble<f64>,
    y: &DVector<f64>,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<P1Result> {
    check(ens, y, epsilon, opts)?;
    let n = ens.n();
    let r = ens.r();
    let signs: &[(f64, f64)] = if r == 0.0 {
        &[(1.0, 0.0)]
    } else {
        &[(1.0, 1.0), (1.0, -1.0)]
    };
    let d = generators(ens, signs);
    let problem = L1Problem {
        d: &d,
        y,
        eps: epsilon,
        penalty: Penalty::NonNeg,
    };
    let (out, _) = solve_l1(&problem, opts, None);
    let mu = out.x.map(|v| v.max(0.0));
    let (x, p) = if r == 0.0 {
        (mu, DVector::zeros(n))
    } else {
        let lo = mu.rows(0, n);
        let hi = mu.rows(n, n);
        (lo + hi, (lo - hi) * r)
    };
    Ok(P1Result { x, p, info: out.info })
}

pub fn solve_relaxed(
    ens: &SensingEnsemble<f64>,
    y: &DVector<f64>,
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<RelaxedResult> {
    check(ens, y, epsilon, opts)?;
    let n = ens.n();
    let r = ens.r();
    let signs: &[(f64, f64)] = if r == 0.0 {
        &[(1.0, 0.0), (-1.0, 0.0)]
    } else {
        &[(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
    };
    let d = generators(ens, signs);
    let problem = L1Problem {
        d: &d,
        y,
        eps: epsilon,
        penalty: Penalty::NonNeg,
    };
    let (out, _) = solve_l1(&problem, opts, None);
    let mu = out.x.map(|v| v.max(0.0));
    let blk = |i: usize| mu.rows(i * n, n).into_owned();
    let (x_plus, x_minus, p) = if r == 0.0 {
        (blk(0), blk(1), DVector::zeros(n))
    } else {
        let (m1, m2, m3, m4) = (blk(0), blk(1), blk(2), blk(3));
        let p = (&m1 - &m2 + &m3 - &m4) * r;
        (m1 + m2, m3 + m4, p)
    };
    Ok(RelaxedResult {
        x_plus,
        x_minus,
        p,
        info: out.info,
    })
}
