//! Scalar abstraction shared by every numeric type in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating point type usable as a pressure or coordinate value.
///
/// Implemented for `f32` and `f64`. Everything that crosses a text
/// boundary (lattice files, capture logs) goes through `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; exact for `f64` itself.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 converts to every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    /// Linear blend between `a` and `b` for `t` in `[0, 1]`.
    ///
    /// Exact at both ends and never leaves `[min(a, b), max(a, b)]`,
    /// even after rounding.
    #[inline]
    fn lerp(a: Self, b: Self, t: Self) -> Self {
        let zero = Self::zero();
        let one = Self::one();
        if (a <= zero && b >= zero) || (a >= zero && b <= zero) {
            return t * b + (one - t) * a;
        }
        if t == one {
            return b;
        }
        let x = a + t * (b - a);
        if b > a {
            x.min(b)
        } else {
            x.max(b)
        }
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + NumCast + Sum + Default + Debug + Display + Send + Sync + 'static
{
}
