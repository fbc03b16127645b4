//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the simulator and the learning pipeline are written against.
///
/// Implemented for `f32` and `f64`. Solver tolerances scale with the type so the
/// same code paths stay well-posed in single precision.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    /// Angular tolerance used by the orientation root find.
    fn angle_tol() -> Self;

    /// Length tolerance for contact queries (mm).
    fn length_tol() -> Self;
}

impl Real for f32 {
    #[inline]
    fn angle_tol() -> Self {
        2e-6
    }

    #[inline]
    fn length_tol() -> Self {
        5e-4
    }
}

impl Real for f64 {
    #[inline]
    fn angle_tol() -> Self {
        1e-10
    }

    #[inline]
    fn length_tol() -> Self {
        1e-9
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let mut r = a % tau;
    if r > T::PI() {
        r -= tau;
    } else if r <= -T::PI() {
        r += tau;
    }
    r
}
