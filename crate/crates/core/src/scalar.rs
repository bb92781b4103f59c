//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
///
/// Besides the arithmetic supplied by `num-traits`, each scalar carries its own
/// default tolerances so that generic code never hard-codes a threshold that is
/// below the type's resolution.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Default structural tolerance (Hermiticity, PSD, unit diagonal, rank).
    fn default_tol() -> Self;
    /// Tolerance on the trace of a density matrix.
    fn trace_tol() -> Self;
    /// Eigenvalues below this contribute nothing to entropies (0 log 0 = 0).
    fn entropy_cutoff() -> Self;
    /// Eigenvalues below this are treated as numerical zeros inside matrix
    /// square roots.
    fn sqrt_cutoff() -> Self;

    /// Lossy conversion from a literal. Panics only if `Self` cannot
    /// represent finite `f64` values at all, which never happens for f32/f64.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize fits in float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn default_tol() -> Self {
        1e-10
    }
    fn trace_tol() -> Self {
        1e-9
    }
    fn entropy_cutoff() -> Self {
        1e-15
    }
    fn sqrt_cutoff() -> Self {
        1e-14
    }
}

impl Real for f32 {
    fn default_tol() -> Self {
        1e-4
    }
    fn trace_tol() -> Self {
        1e-4
    }
    fn entropy_cutoff() -> Self {
        1e-7
    }
    fn sqrt_cutoff() -> Self {
        1e-6
    }
}

/// Complex scalar over a [`Real`].
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cz<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cre<T: Real>(re: T) -> C<T> {
    C::new(re, T::zero())
}

/// `e^{i theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> C<T> {
    C::new(theta.cos(), theta.sin())
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase<T: Real>(theta: T) -> T {
    let two_pi = T::TAU();
    let mut t = theta % two_pi;
    if t < T::zero() {
        t = t + two_pi;
    }
    if t >= two_pi {
        t = t - two_pi;
    }
    t
}

/// Shannon entropy in bits of a probability vector; zero entries contribute 0.
pub fn shannon_bits<T: Real>(p: &[T]) -> T {
    p.iter()
        .filter(|&&x| x > T::zero())
        .map(|&x| -x * x.log2())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(-std::f64::consts::FRAC_PI_2), 1.5 * std::f64::consts::PI);
        assert_eq!(wrap_phase(0.0_f64), 0.0);
        assert!(wrap_phase(std::f64::consts::TAU) < std::f64::consts::TAU);
        assert!((wrap_phase(7.0_f32) - (7.0 - std::f32::consts::TAU)).abs() < 1e-6);
    }

    #[test]
    fn binary_entropy() {
        let h = shannon_bits(&[0.8_f64, 0.2]);
        assert!((h - 0.721_928_094_887_362_3).abs() < 1e-12);
        assert_eq!(shannon_bits(&[1.0_f64, 0.0]), 0.0);
    }
}
