//! Isometry constants, recovery conditions, bound constants and error metrics.

mod bounds;
mod metrics;
mod ric;

pub use bounds::{
    baseline_bound_constants, compressible_bound_constants, drip_threshold, max_perturbation_radius,
    sparse_bound_constants, BoundReport,
};
pub use metrics::{error_metrics, ErrorMetrics};
pub use ric::{
    binomial, compute_drip, compute_drip_with, compute_ric, compute_ric_with, next_combination, spectral_norm,
    unrank_combination, DRipReport, RicMode, RicOptions, RipReport, DEFAULT_BUDGET,
};
