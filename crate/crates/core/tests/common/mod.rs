//! Reference implementations used as test oracles.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pcs_core::Scalar;

/// Every `k`-subset of `0..n`, generated recursively.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            if n - j < k - cur.len() {
                break;
            }
            cur.push(j);
            go(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn columns<T: Scalar>(m: &DMatrix<T>, cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Isometry deviation of a column subset via singular values.
pub fn svd_deviation<T: Scalar>(m: &DMatrix<T>, cols: &[usize]) -> f64 {
    let sub = columns(m, cols);
    let sv = sub.singular_values();
    let mut hi = sv.max().powi(2);
    let mut lo = sv.min().powi(2);
    if cols.len() > m.nrows() {
        lo = 0.0;
    }
    hi -= 1.0;
    lo = 1.0 - lo;
    hi.max(lo)
}

pub fn ric_oracle<T: Scalar>(m: &DMatrix<T>, k: usize) -> f64 {
    subsets(m.ncols(), k)
        .iter()
        .map(|s| svd_deviation(m, s))
        .fold(0.0, f64::max)
}

pub fn drip_oracle<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, k: usize) -> f64 {
    let n = a.ncols();
    let mut psi = DMatrix::zeros(a.nrows(), 2 * n);
    psi.columns_mut(0, n).copy_from(a);
    psi.columns_mut(n, n).copy_from(b);
    subsets(n, k)
        .iter()
        .map(|s| {
            let joint: Vec<usize> = s.iter().copied().chain(s.iter().map(|j| j + n)).collect();
            svd_deviation(&psi, &joint)
        })
        .fold(0.0, f64::max)
}

/// Sparsest exact solution of `y = Mx` by exhaustive support search.
pub fn l0_oracle(m: &DMatrix<f64>, y: &DVector<f64>, max_k: usize) -> Option<DVector<f64>> {
    let n = m.ncols();
    if y.norm() == 0.0 {
        return Some(DVector::zeros(n));
    }
    for k in 1..=max_k {
        for s in subsets(n, k) {
            let sub = columns(m, &s);
            let Some(coef) = sub.clone().svd(true, true).solve(y, 1e-12).ok() else {
                continue;
            };
            if (y - &sub * &coef).norm() <= 1e-9 * y.norm() {
                let mut x = DVector::zeros(n);
                for (i, &j) in s.iter().enumerate() {
                    x[j] = coef[i];
                }
                return Some(x);
            }
        }
    }
    None
}

/// `argmin |c − gβ|` over a uniform grid of `[−r, r]`.
pub fn scalar_box_grid(g: &DVector<f64>, c: &DVector<f64>, r: f64, points: usize) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..points {
        let beta = -r + 2.0 * r * i as f64 / (points - 1) as f64;
        let res = (c - g * beta).norm();
        if res < best.0 {
            best = (res, beta);
        }
    }
    best.1
}

/// Least-squares slope and intercept with the coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (slope, intercept, 1.0 - ss_res / ss_tot)
}
