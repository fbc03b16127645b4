//! Planar vectors and bracketed scalar root finding.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector at `angle` radians from +x.
    pub fn from_angle(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign.
///
/// Returns `None` when the bracket is invalid or `max_iter` is exhausted.
pub fn brent<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    xtol: T,
    max_iter: usize,
) -> Option<T> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == T::zero() {
        return Some(a);
    }
    if fb == T::zero() {
        return Some(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }
    let two = T::two();
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + xtol * T::half();
        let m = (c - b) * T::half();
        if m.abs() <= tol || fb == T::zero() {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            let lit3 = T::lit(3.0);
            if two * p < (lit3 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol {
            b + d
        } else if m > T::zero() {
            b + tol
        } else {
            b - tol
        };
        fb = f(b);
        if !fb.is_finite() {
            return None;
        }
    }
    None
}

/// Grows a symmetric bracket around `center` until `f` changes sign, then refines with Brent.
///
/// Both endpoints are clamped to `[lo, hi]`.
pub fn root_near<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    center: T,
    initial_half_width: T,
    lo: T,
    hi: T,
    max_half_width: T,
    xtol: T,
) -> Option<T> {
    let f0 = f(center);
    if f0 == T::zero() {
        return Some(center);
    }
    let mut h = initial_half_width;
    while h <= max_half_width {
        let a = (center - h).max(lo);
        let b = (center + h).min(hi);
        let fa = f(a);
        let fb = f(b);
        // Prefer the half-bracket adjacent to the previous solution.
        if fa.is_finite() && fa.signum() != f0.signum() {
            return brent(&mut f, a, center, xtol, 200);
        }
        if fb.is_finite() && fb.signum() != f0.signum() {
            return brent(&mut f, center, b, xtol, 200);
        }
        if a <= lo && b >= hi {
            break;
        }
        h = h * T::two();
    }
    None
}
