//! Scalar field abstraction shared by every table and generator.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, NumCast, ToPrimitive};

/// Real scalar type: `f32` or `f64`.
pub trait Real:
    Field<Real = Self> + Float + FromPrimitive + ToPrimitive + NumCast + PartialOrd + Display
{
    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).unwrap()
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap()
    }
}

/// Scalar field over which elements live.
///
/// Implemented for `f32`, `f64`, `Complex<f32>` and `Complex<f64>`.
pub trait Field:
    Copy + Debug + PartialEq + NumAssign + std::ops::Neg<Output = Self> + Sum + Send + Sync + 'static
{
    type Real: Real;

    /// Absolute value (modulus for complex numbers).
    fn modulus(self) -> Self::Real;
    fn conj(self) -> Self;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    /// No infinite or NaN part.
    fn finite(self) -> bool;

    /// Reciprocal extended to the projective line: `0 ↦ ∞` and `∞ ↦ 0`.
    /// NaN stays NaN.
    fn recip_or_inf(self) -> Self {
        if self.has_nan() {
            self
        } else if self == Self::zero() {
            Self::from_real(Self::Real::infinity())
        } else if !self.finite() {
            Self::zero()
        } else {
            Self::one() / self
        }
    }

    fn has_nan(self) -> bool {
        Float::is_nan(self.re()) || Float::is_nan(self.im())
    }

    fn from_f64(x: f64) -> Self {
        Self::from_real(Self::Real::of(x))
    }

    /// Machine epsilon of the underlying real type.
    fn eps() -> Self::Real {
        <Self::Real as Float>::epsilon()
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Field for $t {
            type Real = $t;
            #[inline]
            fn modulus(self) -> $t {
                self.abs()
            }
            #[inline]
            fn conj(self) -> $t {
                self
            }
            #[inline]
            fn re(self) -> $t {
                self
            }
            #[inline]
            fn im(self) -> $t {
                0.0
            }
            #[inline]
            fn from_real(r: $t) -> $t {
                r
            }
            #[inline]
            fn finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
        impl Real for $t {}
    };
}

impl_real!(f32);
impl_real!(f64);

impl<R: Real + Float + NumAssign + Sum + Debug + Send + Sync + 'static> Field for Complex<R>
where
    Complex<R>: Sum,
{
    type Real = R;
    #[inline]
    fn modulus(self) -> R {
        self.norm()
    }
    #[inline]
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    #[inline]
    fn re(self) -> R {
        self.re
    }
    #[inline]
    fn im(self) -> R {
        self.im
    }
    #[inline]
    fn from_real(r: R) -> Self {
        Complex::new(r, R::zero())
    }
    #[inline]
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn projective_reciprocal() {
        assert_eq!(0.0f64.recip_or_inf(), f64::INFINITY);
        assert_eq!(f64::INFINITY.recip_or_inf(), 0.0);
        assert_eq!(4.0f64.recip_or_inf(), 0.25);
        assert!(f64::NAN.recip_or_inf().is_nan());
        let z = Complex64::new(0.0, 0.0).recip_or_inf();
        assert!(!z.finite());
        let back = (z - Complex64::new(1.0, 2.0)).recip_or_inf();
        assert_eq!(back, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn complex_modulus() {
        assert_eq!(Complex64::new(3.0, 4.0).modulus(), 5.0);
        assert_eq!(Field::conj(Complex64::new(1.0, 2.0)), Complex64::new(1.0, -2.0));
    }
}
