use nalgebra::{Complex, ComplexField};
use std::fmt::Debug;

/// Field of matrix and vector entries: `f64` or `Complex<f64>`.
///
/// Norms always use the modulus, so `‖x‖₁ = Σ|xⱼ|` for both fields.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + Debug + 'static {
    const IS_COMPLEX: bool;

    /// Builds a value from real and imaginary parts. Returns `None` for a real
    /// field when `im != 0`.
    fn try_from_parts(re: f64, im: f64) -> Option<Self>;

    fn re(self) -> f64;

    fn im(self) -> f64;

    /// `x / |x|`, or zero at the origin.
    fn unit(self) -> Self {
        let m = self.modulus();
        if m == 0.0 {
            Self::zero()
        } else {
            self.unscale(m)
        }
    }
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn try_from_parts(re: f64, im: f64) -> Option<Self> {
        (im == 0.0).then_some(re)
    }

    fn re(self) -> f64 {
        self
    }

    fn im(self) -> f64 {
        0.0
    }
}

impl Scalar for Complex<f64> {
    const IS_COMPLEX: bool = true;

    fn try_from_parts(re: f64, im: f64) -> Option<Self> {
        Some(Complex::new(re, im))
    }

    fn re(self) -> f64 {
        self.re
    }

    fn im(self) -> f64 {
        self.im
    }
}
