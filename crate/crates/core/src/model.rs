//! Problem generation and the perturbed observation model
//! `y = (A + B·diag(β))·x + e`.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{seeded, Rng};
use crate::{Error, Result, Scalar};

/// Allowed deviation of a column norm from 1.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// The known pair `(A, B)` together with the perturbation radius `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingEnsemble<T: Scalar = f64> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    r: f64,
}

impl<T: Scalar> SensingEnsemble<T> {
    /// Validates shapes, `r ≥ 0` and unit-norm columns of both matrices.
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, r: f64) -> Result<Self> {
        if a.shape() != b.shape() {
            return Err(Error::invalid(format!("A is {:?} but B is {:?}", a.shape(), b.shape())));
        }
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::invalid("empty sensing matrices"));
        }
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::invalid(format!("perturbation radius {r} must be >= 0")));
        }
        for (name, mat) in [("A", &a), ("B", &b)] {
            if let Some(j) = (0..mat.ncols()).find(|&j| (mat.column(j).norm() - 1.0).abs() > UNIT_NORM_TOL) {
                return Err(Error::invalid(format!(
                    "column {j} of {name} has norm {}",
                    mat.column(j).norm()
                )));
            }
        }
        Ok(Self { a, b, r })
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Same matrices with a different radius.
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("perturbation radius {r} must be >= 0")));
        }
        Ok(Self {
            a: self.a.clone(),
            b: self.b.clone(),
            r,
        })
    }

    /// `Ψ = [A, B]`.
    pub fn psi(&self) -> DMatrix<T> {
        let (m, n) = self.a.shape();
        let mut psi = DMatrix::zeros(m, 2 * n);
        psi.columns_mut(0, n).copy_from(&self.a);
        psi.columns_mut(n, n).copy_from(&self.b);
        psi
    }

    /// `Φ(β) = A + B·diag(β)`.
    pub fn phi(&self, beta: &DVector<f64>) -> DMatrix<T> {
        assert_eq!(beta.len(), self.n(), "beta length");
        let mut phi = self.a.clone();
        for (j, &bj) in beta.iter().enumerate() {
            if bj != 0.0 {
                phi.column_mut(j).axpy(T::from_real(bj), &self.b.column(j), T::one());
            }
        }
        phi
    }
}

/// Original signal, perturbation and noise for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<T: Scalar = f64> {
    pub x_o: DVector<T>,
    pub beta_o: DVector<f64>,
    pub e: DVector<T>,
    pub epsilon: f64,
    /// Sparsity (or approximation) level.
    pub k: usize,
    /// Whether `x_o` is claimed to be `k`-sparse.
    pub sparse: bool,
}

impl<T: Scalar> GroundTruth<T> {
    /// Checks `|β| ≤ r`, `‖e‖₂ ≤ ε` and, for sparse signals, `‖x‖₀ ≤ k`.
    pub fn new(
        x_o: DVector<T>,
        beta_o: DVector<f64>,
        e: DVector<T>,
        epsilon: f64,
        k: usize,
        sparse: bool,
        r: f64,
    ) -> Result<Self> {
        if x_o.len() != beta_o.len() {
            return Err(Error::invalid("x_o and beta_o lengths differ"));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::invalid(format!("epsilon {epsilon} must be >= 0")));
        }
        if beta_o.iter().any(|b| b.abs() > r) {
            return Err(Error::invalid(format!("beta_o leaves [-{r}, {r}]")));
        }
        if e.norm() > epsilon + 1e-12 {
            return Err(Error::invalid(format!(
                "noise norm {} exceeds epsilon {epsilon}",
                e.norm()
            )));
        }
        if sparse && x_o.iter().filter(|v| !v.is_zero()).count() > k {
            return Err(Error::invalid(format!("x_o has more than {k} nonzeros")));
        }
        Ok(Self {
            x_o,
            beta_o,
            e,
            epsilon,
            k,
            sparse,
        })
    }

    pub fn n(&self) -> usize {
        self.x_o.len()
    }
}

/// Power-law compressible signal: sorted magnitudes `c_q · j^(−q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressibleSpec {
    pub n: usize,
    pub q: f64,
    pub c_q: f64,
}

impl CompressibleSpec {
    pub fn new(n: usize, q: f64, c_q: f64) -> Result<Self> {
        let spec = Self { n, q, c_q };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.q > 1.0) || !(self.c_q > 0.0) {
            return Err(Error::invalid(format!(
                "compressible spec needs n > 0, q > 1, c_q > 0 (got {self:?})"
            )));
        }
        Ok(())
    }

    /// Unpermuted template, sorted by decreasing magnitude.
    pub fn template(&self) -> Vec<f64> {
        (1..=self.n).map(|j| self.c_q * (j as f64).powf(-self.q)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SignalKind {
    /// `k` entries of ±1 at uniformly random positions.
    UnitSpikes,
    /// `k` entries of +1 at uniformly random positions.
    PositiveSpikes,
    /// Power-law template, randomly permuted and sign-flipped.
    Compressible(CompressibleSpec),
}

/// Observations together with the declared noise bound.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T: Scalar = f64> {
    pub y: DVector<T>,
    pub epsilon: f64,
}

/// Gaussian `A` and `B` with mean-centred, unit-norm columns.
pub fn gen_gaussian_ensemble(m: usize, n: usize, r: f64, seed: u64) -> Result<SensingEnsemble> {
    gen_gaussian_ensemble_with(m, n, r, &mut seeded(seed))
}

pub fn gen_gaussian_ensemble_with(m: usize, n: usize, r: f64, rng: &mut Rng) -> Result<SensingEnsemble> {
    if m == 0 || n == 0 {
        return Err(Error::invalid(format!("dimensions must be positive (m={m}, n={n})")));
    }
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("perturbation radius {r} must be >= 0")));
    }
    let a = gaussian_unit_columns(m, n, rng);
    let b = gaussian_unit_columns(m, n, rng);
    SensingEnsemble::new(a, b, r)
}

fn gaussian_unit_columns(m: usize, n: usize, rng: &mut Rng) -> DMatrix<f64> {
    let mut mat = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut col in mat.column_iter_mut() {
        // a length-1 column would centre to zero
        if m > 1 {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        let norm = col.norm();
        col /= norm;
    }
    mat
}

pub fn gen_signal(n: usize, k: usize, kind: SignalKind, seed: u64) -> Result<DVector<f64>> {
    gen_signal_with(n, k, kind, &mut seeded(seed))
}

pub fn gen_signal_with(n: usize, k: usize, kind: SignalKind, rng: &mut Rng) -> Result<DVector<f64>> {
    match kind {
        SignalKind::UnitSpikes | SignalKind::PositiveSpikes => {
            if k > n {
                return Err(Error::invalid(format!("sparsity {k} exceeds length {n}")));
            }
            let mut x = DVector::zeros(n);
            for idx in sample(rng, n, k).into_iter() {
                x[idx] = match kind {
                    SignalKind::UnitSpikes if rng.random::<bool>() => -1.0,
                    _ => 1.0,
                };
            }
            Ok(x)
        }
        SignalKind::Compressible(spec) => {
            spec.validate()?;
            if spec.n != n {
                return Err(Error::invalid(format!(
                    "compressible spec length {} differs from n = {n}",
                    spec.n
                )));
            }
            let mut values = spec.template();
            values.shuffle(rng);
            for v in values.iter_mut() {
                if rng.random::<bool>() {
                    *v = -*v;
                }
            }
            Ok(DVector::from_vec(values))
        }
    }
}

/// I.i.d. uniform entries on `[−r, r]`.
pub fn gen_perturbation(n: usize, r: f64, seed: u64) -> Result<DVector<f64>> {
    gen_perturbation_with(n, r, &mut seeded(seed))
}

pub fn gen_perturbation_with(n: usize, r: f64, rng: &mut Rng) -> Result<DVector<f64>> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!("perturbation radius {r} must be >= 0")));
    }
    if r == 0.0 {
        return Ok(DVector::zeros(n));
    }
    Ok(DVector::from_fn(n, |_, _| rng.random_range(-r..=r)))
}

/// Gaussian draw rescaled to `‖e‖₂ = ε` exactly.
pub fn gen_noise(m: usize, epsilon: f64, seed: u64) -> Result<DVector<f64>> {
    gen_noise_with(m, epsilon, &mut seeded(seed))
}

pub fn gen_noise_with(m: usize, epsilon: f64, rng: &mut Rng) -> Result<DVector<f64>> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("noise level {epsilon} must be >= 0")));
    }
    // draw even when epsilon = 0 so the stream position does not depend on it
    let g = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    if epsilon == 0.0 {
        return Ok(DVector::zeros(m));
    }
    let norm = g.norm();
    Ok(g * (epsilon / norm))
}

/// `y = (A + B·diag(β°))·x° + e`.
pub fn measure<T: Scalar>(ens: &SensingEnsemble<T>, gt: &GroundTruth<T>) -> Result<MeasurementSet<T>> {
    if gt.n() != ens.n() || gt.e.len() != ens.m() {
        return Err(Error::invalid(format!(
            "ground truth (n={}, m={}) does not fit a {}x{} ensemble",
            gt.n(),
            gt.e.len(),
            ens.m(),
            ens.n()
        )));
    }
    let bx = gt.x_o.zip_map(&gt.beta_o, |x, b| x.scale(b));
    let y = ens.a() * &gt.x_o + ens.b() * bx + &gt.e;
    Ok(MeasurementSet { y, epsilon: gt.epsilon })
}

/// Keeps the `k` largest-magnitude entries; ties go to the lowest index.
pub fn best_k_term<T: Scalar>(x: &DVector<T>, k: usize) -> Result<DVector<T>> {
    if k > x.len() {
        return Err(Error::invalid(format!("k = {k} exceeds length {}", x.len())));
    }
    let mut out = DVector::zeros(x.len());
    for j in largest_indices(x, k) {
        out[j] = x[j];
    }
    Ok(out)
}

/// Indices of the `k` largest moduli, ordered by decreasing modulus then index.
pub fn largest_indices<T: Scalar>(x: &DVector<T>, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    // stable sort keeps lower indices first among equal magnitudes
    idx.sort_by(|&i, &j| x[j].modulus().total_cmp(&x[i].modulus()));
    idx.truncate(k);
    idx
}

/// Support (indices of nonzero entries).
pub fn support<T: Scalar>(x: &DVector<T>) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter_map(|(j, v)| (!v.is_zero()).then_some(j))
        .collect()
}

pub fn l1_norm<T: Scalar>(x: &DVector<T>) -> f64 {
    x.iter().map(|v| v.modulus()).sum()
}
