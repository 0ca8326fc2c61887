//! `min ‖c − Gβ‖₂` over the box `[−r, r]ⁿ` with real `β`.
//!
//! Projected Newton on `f(β) = ½βᵀHβ − bᵀβ`, `H = Re(GᴴG)`, `b = Re(Gᴴc)`:
//! each iteration takes a projected gradient (Cauchy) step and then a Newton
//! step on the coordinates strictly inside the box, with a projected
//! backtracking search. Every accepted step lowers `f`, so the residual at the
//! returned point never exceeds the residual at the starting point.

use nalgebra::{DMatrix, DVector};

use super::admm::robust_cholesky;
use super::{SolveInfo, SolveStatus, SolverOptions, SolverResult};
use crate::{Error, Result, Scalar};

/// Columns with norm at most this fraction of the largest column norm do not
/// influence the residual and are pinned to zero.
pub const FLAT_COLUMN_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxLsProblem<T: Scalar = f64> {
    pub g: DMatrix<T>,
    pub c: DVector<T>,
    pub r: f64,
}

impl<T: Scalar> BoxLsProblem<T> {
    pub fn new(g: DMatrix<T>, c: DVector<T>, r: f64) -> Result<Self> {
        let p = Self { g, c, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.g.nrows() != self.c.len() {
            return Err(Error::invalid(format!(
                "G has {} rows but c has length {}",
                self.g.nrows(),
                self.c.len()
            )));
        }
        if !(self.r >= 0.0) || !self.r.is_finite() {
            return Err(Error::invalid(format!(
                "box radius must be finite and >= 0, got {}",
                self.r
            )));
        }
        if self.g.iter().chain(self.c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("G and c must be finite"));
        }
        Ok(())
    }

    fn residual(&self, beta: &DVector<f64>) -> f64 {
        let b = beta.map(T::from_real);
        (&self.c - &self.g * b).norm()
    }
}

pub fn solve_box_ls<T: Scalar>(problem: &BoxLsProblem<T>, opts: &SolverOptions) -> Result<SolverResult<f64>> {
    let start = DVector::zeros(problem.g.ncols());
    solve_box_ls_from(problem, &start, opts)
}

/// Starts from `start` (clamped into the box).
pub fn solve_box_ls_from<T: Scalar>(
    problem: &BoxLsProblem<T>,
    start: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<SolverResult<f64>> {
    problem.validate()?;
    opts.validate()?;
    let n = problem.g.ncols();
    if start.len() != n {
        return Err(Error::invalid(format!(
            "start has length {} but G has {n} columns",
            start.len()
        )));
    }
    let r = problem.r;
    let mut beta = start.map(|v| if v.is_finite() { v.clamp(-r, r) } else { 0.0 });

    let norms: Vec<f64> = problem.g.column_iter().map(|c| c.norm()).collect();
    let cmax = norms.iter().copied().fold(0.0, f64::max);
    let active: Vec<usize> = (0..n)
        .filter(|&j| norms[j] > FLAT_COLUMN_REL * cmax && cmax > 0.0)
        .collect();
    for j in 0..n {
        if !active.contains(&j) {
            beta[j] = 0.0;
        }
    }

    let finish = |beta: DVector<f64>, status, iterations, kkt| {
        let res = problem.residual(&beta);
        SolverResult {
            x: beta,
            info: SolveInfo {
                status,
                objective: res,
                residual_norm: res,
                iterations,
                kkt_residual: kkt,
                polished: false,
            },
        }
    };
    if r == 0.0 || active.is_empty() {
        return Ok(finish(beta, SolveStatus::Optimal, 0, 0.0));
    }

    let ga = problem.g.select_columns(active.iter());
    let h = ga.ad_mul(&ga).map(|v| v.re());
    let b = ga.ad_mul(&problem.c).map(|v| v.re());
    let mut x = DVector::from_iterator(active.len(), active.iter().map(|&j| beta[j]));
    let (status, iterations, kkt) = projected_newton(&h, &b, r, &mut x, opts);
    for (pos, &j) in active.iter().enumerate() {
        beta[j] = x[pos].clamp(-r, r);
    }
    Ok(finish(beta, status, iterations, kkt))
}

fn clamp_box(v: &mut DVector<f64>, r: f64) {
    v.apply(|e| *e = e.clamp(-r, r));
}

fn quad(h: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    0.5 * x.dot(&(h * x)) - b.dot(x)
}

fn projected_newton(
    h: &DMatrix<f64>,
    b: &DVector<f64>,
    r: f64,
    x: &mut DVector<f64>,
    opts: &SolverOptions,
) -> (SolveStatus, usize, f64) {
    let n = x.len();
    let lipschitz = h
        .row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let interior = 1e-12 * r;
    let mut pg_norm = f64::INFINITY;

    for iter in 0..opts.max_iter {
        let g = h * &*x - b;
        let mut stepped = &*x - &g;
        clamp_box(&mut stepped, r);
        pg_norm = (&*x - &stepped).amax();
        if pg_norm <= opts.abs_tol {
            return (SolveStatus::Optimal, iter, pg_norm);
        }

        let mut xc = &*x - g.unscale(lipschitz);
        clamp_box(&mut xc, r);
        let fc = quad(h, b, &xc);

        let free: Vec<usize> = (0..n).filter(|&i| xc[i].abs() < r - interior).collect();
        let mut best = xc.clone();
        if !free.is_empty() {
            let gc = h * &xc - b;
            let hff = h.select_rows(free.iter()).select_columns(free.iter());
            if let Some(ch) = robust_cholesky(hff) {
                let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| -gc[i]));
                let step = ch.solve(&rhs);
                let mut t = 1.0;
                for _ in 0..40 {
                    let mut trial = xc.clone();
                    for (pos, &i) in free.iter().enumerate() {
                        trial[i] += t * step[pos];
                    }
                    clamp_box(&mut trial, r);
                    if quad(h, b, &trial) <= fc {
                        best = trial;
                        break;
                    }
                    t *= 0.5;
                }
            }
        }
        if quad(h, b, &best) <= quad(h, b, x) {
            *x = best;
        } else {
            // only possible through rounding; the Cauchy point is no worse
            return (SolveStatus::Optimal, iter, pg_norm);
        }
    }
    (SolveStatus::MaxIter, opts.max_iter, pg_norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_problem_clamps_unconstrained_minimiser() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 1.0]));
        let c = DVector::from_vec(vec![0.3, 4.0, -5.0]);
        let p = BoxLsProblem::new(g, c, 1.0).unwrap();
        let out = solve_box_ls(&p, &SolverOptions::default()).unwrap();
        assert_eq!(out.status(), SolveStatus::Optimal);
        assert!((out.x[0] - 0.3).abs() < 1e-12);
        assert_eq!(out.x[1], 1.0);
        assert_eq!(out.x[2], -1.0);
    }

    #[test]
    fn zero_radius_returns_origin() {
        let g = DMatrix::from_element(2, 2, 1.0);
        let p = BoxLsProblem::new(g, DVector::from_element(2, 1.0), 0.0).unwrap();
        let out = solve_box_ls(&p, &SolverOptions::default()).unwrap();
        assert_eq!(out.x, DVector::zeros(2));
    }

    #[test]
    fn flat_columns_pinned_to_zero() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let p = BoxLsProblem::new(g, DVector::from_vec(vec![0.5, 1.0]), 1.0).unwrap();
        let start = DVector::from_vec(vec![0.0, 0.7]);
        let out = solve_box_ls_from(&p, &start, &SolverOptions::default()).unwrap();
        assert_eq!(out.x[1], 0.0);
        assert!((out.x[0] - 0.5).abs() < 1e-12);
    }
}
