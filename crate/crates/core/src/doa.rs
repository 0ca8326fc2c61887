//! Off-grid direction-of-arrival estimation on an `m`-element uniform linear
//! array.
//!
//! Directions are handled through `θ = cos(d) ∈ (−1, 1]`. The array response is
//! `a_l(θ) = exp{iπ(l − (m+1)/2)θ}/√m`, the grid is `θ̃_l = (2l − 1)/n − 1`,
//! and a first-order expansion around the nearest grid point gives the
//! perturbed model with
//!
//! ```text
//! A = [a(θ̃_1) … a(θ̃_n)],  B = κ⁻¹[a′(θ̃_1) … a′(θ̃_n)],  κ = (π/2)√((m² − 1)/3),
//! β_l = κ(θ_j − θ̃_l),      r = κ/n.
//! ```
//!
//! `κ` is exactly `‖a′(θ)‖₂`, so both blocks have unit columns. The expansion
//! remainder of one source is at most `(π²/8n²)√((3m⁴ − 10m² + 7)/15)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::model::{largest_indices, GroundTruth, SensingEnsemble};
use crate::recovery::{recover_aa_p_bpdn, AaOptions, RecoveryResult};
use crate::rng::Rng;
use crate::solvers::{solve_socl1, SocL1Problem, SolverOptions};
use crate::{Complex, Error, Result, C64};

fn phase_offset(m: usize, l: usize) -> f64 {
    l as f64 + 1.0 - (m as f64 + 1.0) / 2.0
}

pub fn steering_vector(m: usize, theta: f64) -> DVector<C64> {
    let scale = 1.0 / (m as f64).sqrt();
    DVector::from_fn(m, |l, _| Complex::from_polar(scale, PI * phase_offset(m, l) * theta))
}

/// `a′(θ)`.
pub fn steering_derivative(m: usize, theta: f64) -> DVector<C64> {
    let a = steering_vector(m, theta);
    DVector::from_fn(m, |l, _| a[l] * C64::new(0.0, PI * phase_offset(m, l)))
}

/// `κ = (π/2)√((m² − 1)/3)`.
pub fn kappa(m: usize) -> f64 {
    let m = m as f64;
    PI / 2.0 * ((m * m - 1.0) / 3.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoaGrid {
    pub n: usize,
    pub points: Vec<f64>,
}

impl DoaGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!("grid size must be even and >= 2, got {n}")));
        }
        let points = (1..=n).map(|l| (2 * l - 1) as f64 / n as f64 - 1.0).collect();
        Ok(Self { n, points })
    }

    pub fn spacing(&self) -> f64 {
        2.0 / self.n as f64
    }

    /// Index of the grid point closest to `theta` (lower index on ties).
    pub fn nearest(&self, theta: f64) -> usize {
        let pos = ((theta + 1.0) * self.n as f64 / 2.0).floor();
        (pos.max(0.0) as usize).min(self.n - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaScene {
    pub theta: Vec<f64>,
    pub s: Vec<C64>,
}

impl DoaScene {
    pub fn new(theta: Vec<f64>, s: Vec<C64>) -> Result<Self> {
        if theta.is_empty() || theta.len() != s.len() {
            return Err(Error::invalid("scene needs matching, non-empty theta and s"));
        }
        if theta.iter().any(|t| !(*t > -1.0 && *t <= 1.0)) {
            return Err(Error::invalid("every theta must lie in (-1, 1]"));
        }
        let mut sorted = theta.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("source directions must be distinct"));
        }
        Ok(Self { theta, s })
    }

    pub fn k(&self) -> usize {
        self.theta.len()
    }

    pub fn s_norm(&self) -> f64 {
        self.s.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// One source per interval, uniform position, unit amplitude, uniform phase.
    pub fn random(intervals: &[(f64, f64)], rng: &mut Rng) -> Result<Self> {
        let mut theta = Vec::with_capacity(intervals.len());
        let mut s = Vec::with_capacity(intervals.len());
        for &(lo, hi) in intervals {
            if !(lo < hi) {
                return Err(Error::invalid(format!("empty interval [{lo}, {hi}]")));
            }
            theta.push(rng.random_range(lo..hi));
            s.push(Complex::from_polar(1.0, rng.random_range(0.0..2.0 * PI)));
        }
        Self::new(theta, s)
    }

    /// The two-source protocol: `θ₁ ∈ [2/n, 4/n]`, `θ₂ ∈ [12/n, 14/n]`.
    pub fn two_source_intervals(n: usize) -> [(f64, f64); 2] {
        let n = n as f64;
        [(2.0 / n, 4.0 / n), (12.0 / n, 14.0 / n)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaModel {
    pub ens: SensingEnsemble<C64>,
    pub kappa: f64,
    pub r: f64,
    /// Residual bound used as `ε`; see [`DoaModel::with_sources`].
    pub eps_model: f64,
    /// Number of sources assumed by [`estimate_doa`].
    pub k: usize,
    pub grid: DoaGrid,
    pub m: usize,
}

impl DoaModel {
    /// Sets `k` and `ε = model_error_bound(m, n, k, ‖s‖₂)`.
    pub fn with_sources(mut self, k: usize, s_norm: f64) -> Result<Self> {
        self.eps_model = model_error_bound(self.m, self.grid.n, k, s_norm)?;
        self.k = k;
        Ok(self)
    }
}

/// Grid model with `k = 1`, `‖s‖₂ = 1` until [`DoaModel::with_sources`].
pub fn build_grid_model(m: usize, n: usize) -> Result<DoaModel> {
    if m < 2 {
        return Err(Error::invalid(format!("array needs at least 2 sensors, got {m}")));
    }
    let grid = DoaGrid::new(n)?;
    let kap = kappa(m);
    let mut a = DMatrix::zeros(m, n);
    let mut b = DMatrix::zeros(m, n);
    for (l, &t) in grid.points.iter().enumerate() {
        a.set_column(l, &steering_vector(m, t));
        b.set_column(l, &steering_derivative(m, t).unscale(kap));
    }
    let r = kap / n as f64;
    let ens = SensingEnsemble::new(a, b, r)?;
    Ok(DoaModel {
        ens,
        kappa: kap,
        r,
        eps_model: model_error_bound(m, n, 1, 1.0)?,
        k: 1,
        grid,
        m,
    })
}

/// `(π²/8n²)√((3m⁴ − 10m² + 7)/15)`: remainder bound for one unit source.
pub fn per_source_remainder_bound(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    PI * PI / (8.0 * n * n) * ((3.0 * m.powi(4) - 10.0 * m * m + 7.0) / 15.0).sqrt()
}

/// `ε = √k‖s‖₂·(π²/8n²)√((3m⁴ − 10m² + 7)/15)`.
pub fn model_error_bound(m: usize, n: usize, k: usize, s_norm: f64) -> Result<f64> {
    if m < 2 || n < 2 || k == 0 || !(s_norm >= 0.0) {
        return Err(Error::invalid(format!(
            "model error bound needs m >= 2, n >= 2, k >= 1, ‖s‖ >= 0 (got m={m}, n={n}, k={k}, ‖s‖={s_norm})"
        )));
    }
    Ok((k as f64).sqrt() * s_norm * per_source_remainder_bound(m, n))
}

/// `‖a(θ) − a(θ̃) − a′(θ̃)(θ − θ̃)‖₂`.
pub fn taylor_remainder(m: usize, theta: f64, grid_point: f64) -> f64 {
    let d = theta - grid_point;
    let lin = steering_vector(m, grid_point) + steering_derivative(m, grid_point) * C64::new(d, 0.0);
    (steering_vector(m, theta) - lin).norm()
}

/// `y = Σ_j a(θ_j)s_j`.
pub fn simulate_scene(scene: &DoaScene, m: usize) -> Result<DVector<C64>> {
    if m == 0 {
        return Err(Error::invalid("array needs at least one sensor"));
    }
    let mut y = DVector::zeros(m);
    for (&t, &s) in scene.theta.iter().zip(&scene.s) {
        y += steering_vector(m, t) * s;
    }
    Ok(y)
}

/// `x°` and `β°` of the grid model for a scene; `e` is the expansion remainder.
pub fn scene_ground_truth(scene: &DoaScene, model: &DoaModel) -> Result<GroundTruth<C64>> {
    let n = model.grid.n;
    let mut x = DVector::zeros(n);
    let mut beta = DVector::zeros(n);
    for (&t, &s) in scene.theta.iter().zip(&scene.s) {
        let l = model.grid.nearest(t);
        if x[l] != C64::new(0.0, 0.0) {
            return Err(Error::invalid("two sources share a grid cell"));
        }
        x[l] = s;
        beta[l] = (model.kappa * (t - model.grid.points[l])).clamp(-model.r, model.r);
    }
    let y = simulate_scene(scene, model.m)?;
    let e = &y - model.ens.phi(&beta) * &x;
    let eps = e.norm().max(model.eps_model);
    GroundTruth::new(x, beta, e, eps, scene.k(), true, model.r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    /// Estimated directions, ascending.
    pub theta_hat: Vec<f64>,
    /// Grid indices of the `k` largest `|x̂_j|`, in the order of `theta_hat`.
    pub support: Vec<usize>,
    pub recovery: RecoveryResult<C64>,
}

pub fn estimate_doa(y: &DVector<C64>, model: &DoaModel, aopts: &AaOptions) -> Result<DoaEstimate> {
    if y.len() != model.m {
        return Err(Error::invalid(format!(
            "y has length {} but the array has {} sensors",
            y.len(),
            model.m
        )));
    }
    let mut recovery = recover_aa_p_bpdn(&model.ens, y, model.eps_model, aopts)?;
    let support = largest_indices(&recovery.x_hat, model.k);
    let on_support: Vec<bool> = (0..model.grid.n).map(|j| support.contains(&j)).collect();
    for (j, b) in recovery.beta_hat.iter_mut().enumerate() {
        if !on_support[j] {
            *b = 0.0;
        }
    }
    let mut pairs: Vec<(f64, usize)> = support
        .iter()
        .map(|&j| (model.grid.points[j] + recovery.beta_hat[j] / model.kappa, j))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DoaEstimate {
        theta_hat: pairs.iter().map(|p| p.0).collect(),
        support: pairs.iter().map(|p| p.1).collect(),
        recovery,
    })
}

/// `1/(3n²)`: mean squared error of nearest-grid assignment for a direction
/// uniform over grid cells.
pub fn mse_lower_bound(n: usize) -> f64 {
    1.0 / (3.0 * (n * n) as f64)
}

/// Standard (unperturbed) ℓ1 recovery of the same scene on a finer grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardCsEstimate {
    pub grid: DoaGrid,
    pub x_hat: DVector<C64>,
    pub epsilon: f64,
}

/// ℓ1 recovery on `A` alone over an `n`-point grid. The slack is the
/// first-order grid error `√k·‖s‖₂·κ/n`.
pub fn standard_cs_estimate(
    y: &DVector<C64>,
    m: usize,
    n: usize,
    k: usize,
    s_norm: f64,
    opts: &SolverOptions,
) -> Result<StandardCsEstimate> {
    let model = build_grid_model(m, n)?;
    let epsilon = (k as f64).sqrt() * s_norm * model.kappa / n as f64;
    let out = solve_socl1(&SocL1Problem::new(model.ens.a().clone(), y.clone(), epsilon)?, opts)?;
    Ok(StandardCsEstimate {
        grid: model.grid,
        x_hat: out.x,
        epsilon,
    })
}
