//! Recovery conditions and error-bound constants.
//!
//! When a condition fails every constant in the report is `+∞`.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub condition_met: bool,
    /// Upper limit the isometry constant must stay strictly below.
    pub threshold: f64,
    pub constants: BTreeMap<String, f64>,
    pub psi_spectral_norm: f64,
}

impl BoundReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }

    fn build(condition_met: bool, threshold: f64, psi_norm: f64, values: &[(&str, f64)]) -> Self {
        let constants = values
            .iter()
            .map(|&(k, v)| (k.to_string(), if condition_met { v } else { f64::INFINITY }))
            .collect();
        Self {
            condition_met,
            threshold,
            constants,
            psi_spectral_norm: psi_norm,
        }
    }
}

/// `(√(2(1+r²)) + 1)⁻¹`.
pub fn drip_threshold(r: f64) -> f64 {
    1.0 / ((2.0 * (1.0 + r * r)).sqrt() + 1.0)
}

/// Largest `r` with `δ̄ < drip_threshold(r)`: `√(½(1/δ̄ − 1)² − 1)`, or 0.
pub fn max_perturbation_radius(delta_bar: f64) -> Result<f64> {
    if !(delta_bar > 0.0 && delta_bar < 1.0) {
        return Err(Error::invalid(format!("delta_bar must lie in (0, 1), got {delta_bar}")));
    }
    let t = 1.0 / delta_bar - 1.0;
    let rad = 0.5 * t * t - 1.0;
    Ok(if rad > 0.0 { rad.sqrt() } else { 0.0 })
}

fn admissible(delta: f64, r: f64, psi_norm: f64) -> bool {
    delta >= 0.0 && r >= 0.0 && psi_norm >= 0.0 && delta.is_finite() && r.is_finite() && psi_norm.is_finite()
}

fn sparse_values(delta: f64, r: f64, psi_norm: f64) -> (f64, f64) {
    let s = (1.0 + r * r).sqrt();
    let c = 4.0 * (1.0 + delta).sqrt() / (1.0 - ((2.0 * (1.0 + r * r)).sqrt() + 1.0) * delta);
    let c_cal = (2.0 + s * psi_norm * c) / (1.0 - delta).sqrt();
    (c, c_cal)
}

/// Sparse-signal constants: `‖x* − x°‖ ≤ C·ε` and
/// `‖(β* − β°)⊙x°‖ ≤ 𝒞·ε` (keys `C`, `C_cal`).
pub fn sparse_bound_constants(delta_bar_4k: f64, r: f64, psi_norm: f64) -> BoundReport {
    let threshold = drip_threshold(r);
    let met = admissible(delta_bar_4k, r, psi_norm) && delta_bar_4k < threshold;
    let (c, c_cal) = sparse_values(delta_bar_4k, r, psi_norm);
    BoundReport::build(met, threshold, psi_norm, &[("C", c), ("C_cal", c_cal)])
}

/// Compressible-signal constants:
/// `‖x* − x°‖ ≤ (C0/√k + C1)‖x° − xᵏ‖₁ + C2·ε` and the same with `𝒞`.
///
/// Keys: `a`, `b`, `C0`, `C1`, `C2`, `C0_cal`, `C1_cal`, `C2_cal`, and the
/// combined tail coefficients `tail` = `C0/√k + C1`, `tail_cal` = `𝒞0/√k + 𝒞1`.
pub fn compressible_bound_constants(delta_bar_4k: f64, r: f64, psi_norm: f64, k: usize) -> BoundReport {
    let threshold = drip_threshold(r);
    let met = admissible(delta_bar_4k, r, psi_norm) && delta_bar_4k < threshold && k > 0;
    let d = delta_bar_4k;
    let s2 = (2.0 * (1.0 + r * r)).sqrt();
    let s = (1.0 + r * r).sqrt();
    let a = 1.0 - (s2 + 1.0) * d;
    let b = (1.0 - d).sqrt();
    let c0 = 2.0 * (1.0 + (s2 - 1.0) * d) / a;
    let c1 = 2.0 * SQRT_2 * r * d / a;
    let c0_cal = s * psi_norm * c0 / b;
    let c1_cal = (s * c1 + 2.0 * r) * psi_norm / b;
    let (c2, c2_cal) = sparse_values(d, r, psi_norm);
    let root_k = (k as f64).sqrt();
    BoundReport::build(
        met,
        threshold,
        psi_norm,
        &[
            ("a", a),
            ("b", b),
            ("C0", c0),
            ("C1", c1),
            ("C2", c2),
            ("C0_cal", c0_cal),
            ("C1_cal", c1_cal),
            ("C2_cal", c2_cal),
            ("tail", c0 / root_k + c1),
            ("tail_cal", c0_cal / root_k + c1_cal),
        ],
    )
}

/// Unperturbed constants `C0_std`, `C1_std` and the multiplicative-noise
/// constant `C_ptb`, where `eps_ratio_2k` bounds `‖E_T‖/‖Φ_T‖` over
/// `2k`-column supports. The condition is the stricter one,
/// `δ_2k < √2/(1 + eps_ratio)² − 1`.
pub fn baseline_bound_constants(delta_2k: f64, eps_ratio_2k: f64) -> BoundReport {
    let d = delta_2k;
    let e = eps_ratio_2k;
    let threshold = SQRT_2 / ((1.0 + e) * (1.0 + e)) - 1.0;
    let met = admissible(d, e, 0.0) && d < threshold;
    let denom = 1.0 - (SQRT_2 + 1.0) * d;
    let c0_std = 2.0 * (1.0 + (SQRT_2 - 1.0) * d) / denom;
    let c1_std = 4.0 * (1.0 + d).sqrt() / denom;
    let dp = (1.0 + d) * (1.0 + e) * (1.0 + e) - 1.0;
    let c_ptb = 4.0 * (1.0 + d).sqrt() * (1.0 + e) / (1.0 - (SQRT_2 + 1.0) * dp);
    BoundReport::build(
        met,
        threshold,
        0.0,
        &[("C0_std", c0_std), ("C1_std", c1_std), ("C_ptb", c_ptb)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_condition_gives_infinite_constants() {
        let rep = sparse_bound_constants(0.5, 0.0, 1.0);
        assert!(!rep.condition_met);
        assert!(rep.constants.values().all(|v| v.is_infinite()));
    }

    #[test]
    fn radius_boundary() {
        let d = 1.0 / (SQRT_2 + 1.0);
        assert!(max_perturbation_radius(d).unwrap() < 1e-6);
        assert!(max_perturbation_radius(0.0).is_err());
        assert!(max_perturbation_radius(1.0).is_err());
    }
}
