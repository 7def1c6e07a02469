use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar used throughout the crate: `f32` or `f64`.
///
/// Every operator, functional and solver is generic over this trait. The
/// default tolerances are tuned for `f64`; with `f32` the operators are exact
/// to single precision but the solvers need looser tolerances.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `|x|^(p-2) x`, extended by `0` at `x = 0` for every `p > 1`.
#[inline]
pub fn signed_pow<T: Real>(x: T, p: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x.abs().powf(p - T::one()) * x.signum()
    }
}

/// `|b|^p - |a|^p` computed without cancellation when `b` is close to `a`.
///
/// `step` is `b - a`, taken from the caller so that it carries full relative
/// precision even when both endpoints are large.
#[inline]
pub(crate) fn abs_pow_diff<T: Real>(a: T, step: T, p: T) -> T {
    let b = a + step;
    let aa = a.abs();
    if aa == T::zero() {
        return b.abs().powf(p);
    }
    if b == T::zero() {
        return -aa.powf(p);
    }
    if a.signum() != b.signum() {
        return b.abs().powf(p) - aa.powf(p);
    }
    // same sign: |b| - |a| = sign(a) * step
    let rel = a.signum() * step / aa;
    aa.powf(p) * (p * rel.ln_1p()).exp_m1()
}

/// Sup norm of a slice.
#[inline]
pub fn sup_norm<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_pow_at_zero_is_zero_for_small_p() {
        assert_eq!(signed_pow(0.0_f64, 1.5), 0.0);
        assert_eq!(signed_pow(0.0_f64, 3.0), 0.0);
        assert_eq!(signed_pow(-2.0_f64, 3.0), -4.0);
        assert_eq!(signed_pow(1.0_f64, 1.5), 1.0);
    }

    #[test]
    fn abs_pow_diff_matches_naive_for_large_steps() {
        for &(a, s, p) in &[(1.0, 0.5, 3.0), (-2.0, 0.1, 1.5), (0.3, -0.9, 2.7), (0.0, 1.0, 2.0)] {
            let naive = ((a + s) as f64).abs().powf(p) - (a as f64).abs().powf(p);
            assert!((abs_pow_diff(a, s, p) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn abs_pow_diff_resolves_tiny_steps() {
        let a = 1.0_f64;
        let s = 1e-14;
        let exact = 3.0 * s; // d/da a^3 at 1
        let got = abs_pow_diff(a, s, 3.0);
        assert!(((got - exact) / exact).abs() < 1e-6, "{got}");
    }
}
