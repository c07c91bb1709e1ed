//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Real floating point type the scheme can be evaluated in.
///
/// Implemented for `f32`, `f64` and the double-double [`DoubleDouble`]. The
/// symbol formulas are evaluated in whichever type the caller picks; the
/// FFT-based pieces additionally need [`SpectralReal`].
pub trait Real:
    'static
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Send
    + Sync
{
    /// Converts an `f64` literal, panicking only for values the type cannot represent.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer not representable in scalar type")
    }

    #[inline]
    fn from_i64_lossy(n: i64) -> Self {
        Self::from_i64(n).expect("integer not representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

}

impl Real for f32 {}
impl Real for f64 {}
impl Real for DoubleDouble {}

/// Roughly 106-bit double-double arithmetic.
pub type DoubleDouble = xprec::Df64;

/// Scalars with an FFT backend (`f32`, `f64`).
pub trait SpectralReal: Real + FftNum {}

impl SpectralReal for f32 {}
impl SpectralReal for f64 {}

/// `i` in the complex type over `T`.
#[inline]
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// `e^{i phase}`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    let (s, c) = phase.sin_cos();
    Complex::new(c, s)
}

/// Principal square root using only real square roots, so it keeps the
/// precision of `T` (the polar route through `atan2` does not for every type).
pub fn csqrt<T: Real>(z: Complex<T>) -> Complex<T> {
    let zero = T::zero();
    let half = T::lit(0.5);
    if z.im == zero {
        return if z.re >= zero {
            Complex::new(z.re.sqrt(), zero)
        } else {
            Complex::new(zero, (-z.re).sqrt())
        };
    }
    let r = (z.re * z.re + z.im * z.im).sqrt();
    if z.re >= zero {
        let t = ((r + z.re) * half).sqrt();
        Complex::new(t, z.im / (t + t))
    } else {
        let t = ((r - z.re) * half).sqrt();
        Complex::new(z.im.abs() / (t + t), t.copysign(z.im))
    }
}

#[inline]
pub fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}
