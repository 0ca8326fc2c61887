//! Restricted isometry constants by support enumeration.
//!
//! `δ_k(M) = max_{|T| = k} max(λmax(M_TᴴM_T) − 1, 1 − λmin(M_TᴴM_T))`.
//!
//! The duplicate constant of `Ψ = [A, B]` ranges only over supports of the form
//! `T ∪ (n + T)`, i.e. the same `k` columns of both blocks.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::model::SensingEnsemble;
use crate::rng::seeded;
use crate::{Error, Execution, Result, Scalar};

/// Largest number of supports enumerated in exact mode.
pub const DEFAULT_BUDGET: u128 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum RicMode {
    Exact,
    /// Random supports; the result is a lower bound.
    Sampled {
        trials: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicOptions {
    pub mode: RicMode,
    pub budget: u128,
    pub exec: Execution,
}

impl Default for RicOptions {
    fn default() -> Self {
        Self {
            mode: RicMode::Exact,
            budget: DEFAULT_BUDGET,
            exec: Execution::default(),
        }
    }
}

impl RicOptions {
    pub fn with_mode(mode: RicMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub k: usize,
    pub delta: f64,
    pub enumerated_supports: u128,
    /// True when `delta` is a sampled lower bound.
    pub sampled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DRipReport {
    /// Per-block support size; the constant is `δ̄_{2k}`.
    pub k: usize,
    pub delta_bar: f64,
    pub enumerated_supports: u128,
    pub sampled: bool,
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// The `rank`-th `k`-subset of `0..n` in lexicographic order.
pub fn unrank_combination(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        loop {
            let remaining = binomial(n - next - 1, k - slot - 1);
            if rank < remaining {
                break;
            }
            rank -= remaining;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances to the next `k`-subset in lexicographic order; false after the last.
pub fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn deviation<T: Scalar>(gram: &DMatrix<T>, cols: &[usize]) -> f64 {
    let s = cols.len();
    if s == 1 {
        return (gram[(cols[0], cols[0])].re() - 1.0).abs();
    }
    let sub = DMatrix::from_fn(s, s, |i, j| gram[(cols[i], cols[j])]);
    let eig = sub.symmetric_eigenvalues();
    let hi = eig.max();
    let lo = eig.min();
    (hi - 1.0).max(1.0 - lo)
}

/// Maximum of `f(support)` over all `k`-subsets of `0..n`, split into
/// contiguous rank ranges.
fn enumerate_max<F>(n: usize, k: usize, total: u128, exec: Execution, f: F) -> f64
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    let chunk_len: u128 = 4096;
    let chunks = total.div_ceil(chunk_len) as usize;
    exec.reduce_chunks(
        chunks,
        0.0_f64,
        |c| {
            let start = c as u128 * chunk_len;
            let len = chunk_len.min(total - start);
            let mut comb = unrank_combination(n, k, start);
            let mut best = f(&comb);
            for _ in 1..len {
                next_combination(&mut comb, n);
                best = best.max(f(&comb));
            }
            best
        },
        f64::max,
    )
}

fn sampled_max<F>(n: usize, k: usize, trials: usize, seed: u64, exec: Execution, f: F) -> f64
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    let mut rng = seeded(seed);
    let supports: Vec<Vec<usize>> = (0..trials)
        .map(|_| {
            let mut s = sample(&mut rng, n, k).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    exec.map_indexed(trials, |i| f(&supports[i]))
        .into_iter()
        .fold(0.0, f64::max)
}

fn check_k(k: usize, limit: usize, what: &str) -> Result<()> {
    if k == 0 || k > limit {
        return Err(Error::invalid(format!("{what}: k must lie in 1..={limit}, got {k}")));
    }
    Ok(())
}

pub fn compute_ric<T: Scalar>(m: &DMatrix<T>, k: usize, mode: RicMode) -> Result<RipReport> {
    compute_ric_with(m, k, &RicOptions::with_mode(mode))
}

pub fn compute_ric_with<T: Scalar>(m: &DMatrix<T>, k: usize, opts: &RicOptions) -> Result<RipReport> {
    let (rows, n) = m.shape();
    check_k(k, rows.min(n), "restricted isometry constant")?;
    let gram = m.ad_mul(m);
    let eval = |cols: &[usize]| deviation(&gram, cols);
    let (delta, count, sampled) = match opts.mode {
        RicMode::Exact => {
            let total = binomial(n, k);
            if total > opts.budget {
                return Err(Error::BudgetExceeded {
                    supports: total,
                    budget: opts.budget,
                });
            }
            (enumerate_max(n, k, total, opts.exec, eval), total, false)
        }
        RicMode::Sampled { trials, seed } => (sampled_max(n, k, trials, seed, opts.exec, eval), trials as u128, true),
    };
    Ok(RipReport {
        k,
        delta,
        enumerated_supports: count,
        sampled,
    })
}

pub fn compute_drip<T: Scalar>(ens: &SensingEnsemble<T>, k: usize, mode: RicMode) -> Result<DRipReport> {
    compute_drip_with(ens, k, &RicOptions::with_mode(mode))
}

pub fn compute_drip_with<T: Scalar>(ens: &SensingEnsemble<T>, k: usize, opts: &RicOptions) -> Result<DRipReport> {
    let n = ens.n();
    check_k(k, n, "duplicate restricted isometry constant")?;
    let gram = ens.psi().ad_mul(&ens.psi());
    let eval = |cols: &[usize]| {
        let joint: Vec<usize> = cols.iter().copied().chain(cols.iter().map(|&j| j + n)).collect();
        deviation(&gram, &joint)
    };
    let (delta_bar, count, sampled) = match opts.mode {
        RicMode::Exact => {
            let total = binomial(n, k);
            if total > opts.budget {
                return Err(Error::BudgetExceeded {
                    supports: total,
                    budget: opts.budget,
                });
            }
            (enumerate_max(n, k, total, opts.exec, eval), total, false)
        }
        RicMode::Sampled { trials, seed } => (sampled_max(n, k, trials, seed, opts.exec, eval), trials as u128, true),
    };
    Ok(DRipReport {
        k,
        delta_bar,
        enumerated_supports: count,
        sampled,
    })
}

/// `‖M‖₂` by power iteration on `MᴴM`, to relative change 1e-10.
pub fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let mut rng = seeded(0x5eed);
    let mut v: DVector<T> = DVector::from_fn(n, |_, _| {
        let g: f64 = StandardNormal.sample(&mut rng);
        T::from_real(g)
    });
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v.unscale_mut(norm);
    let mut sigma2 = 0.0;
    for _ in 0..100_000 {
        let w = m.ad_mul(&(m * &v));
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w.unscale(next);
        let done = (next - sigma2).abs() <= 1e-10 * next;
        sigma2 = next;
        if done {
            break;
        }
    }
    sigma2.sqrt()
}
