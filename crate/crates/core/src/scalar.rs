use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar used by the geometry and entropy code: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Natural log of the area of the unit sphere `S^{m}` embedded in `R^{m+1}`.
pub fn log_unit_sphere_area<T: Real>(m: usize) -> T {
    // |S^m| = 2 pi^{(m+1)/2} / Gamma((m+1)/2)
    let half = T::lit(0.5) * T::from_usize_lossy(m + 1);
    T::LN_2() + half * T::PI().ln() - ln_gamma_half_integer::<T>(m + 1)
}

/// `ln sinh(r)`, without overflow for large `r`; `-∞` for `r ≤ 0`.
pub(crate) fn log_sinh(r: f64) -> f64 {
    if r <= 0.0 {
        f64::NEG_INFINITY
    } else if r < 1.0 {
        r.sinh().ln()
    } else {
        r + (-(-2.0 * r).exp()).ln_1p() - std::f64::consts::LN_2
    }
}

/// `ln Gamma(k/2)` for positive integer `k`, exact recursion on half-integers.
fn ln_gamma_half_integer<T: Real>(k: usize) -> T {
    assert!(k >= 1);
    let mut acc = if k % 2 == 0 {
        T::zero() // Gamma(1) = 1
    } else {
        T::lit(0.5) * T::PI().ln() // Gamma(1/2) = sqrt(pi)
    };
    let mut x = if k % 2 == 0 { T::one() } else { T::lit(0.5) };
    let target = T::lit(0.5) * T::from_usize_lossy(k);
    while x < target {
        acc = acc + x.ln();
        x = x + T::one();
    }
    acc
}
