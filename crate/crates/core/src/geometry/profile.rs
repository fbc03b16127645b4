use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Vec2;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ProfileKind {
    Circle,
    RegularPolygon { sides: usize },
}

/// Cross-section of a rollable prism, centred on its centroid.
///
/// Polygon vertices sit at body angles `-pi/2 - pi/n + 2*pi*k/n`, so at zero
/// orientation face 0 lies flat along the bottom with outward normal `-y`.
/// Boundary arc length is measured counter-clockwise from vertex 0 (polygons)
/// or from the bottom point (circles), and is tracked unwrapped: a full turn
/// adds one perimeter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexProfile<T> {
    pub kind: ProfileKind,
    pub circumradius: T,
}

/// Extreme boundary point of a profile in a body-frame direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support<T> {
    pub point: Vec2<T>,
    /// Unwrapped boundary arc parameter of `point`.
    pub sigma: T,
    /// Unwrapped vertex counter (polygons only).
    pub vertex: Option<i64>,
}

impl<T: Real> ConvexProfile<T> {
    pub fn circle(radius: T) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(Error::InvalidProfile(format!("radius must be positive, got {radius}")));
        }
        Ok(Self {
            kind: ProfileKind::Circle,
            circumradius: radius,
        })
    }

    pub fn regular_polygon(sides: usize, circumradius: T) -> Result<Self> {
        if sides < 3 {
            return Err(Error::InvalidProfile(format!("polygon needs >= 3 sides, got {sides}")));
        }
        if !(circumradius > T::zero()) {
            return Err(Error::InvalidProfile(format!(
                "circumradius must be positive, got {circumradius}"
            )));
        }
        Ok(Self {
            kind: ProfileKind::RegularPolygon { sides },
            circumradius,
        })
    }

    /// Profile whose inscribed circle has diameter `inner_diameter`.
    pub fn from_inner_diameter(kind: ProfileKind, inner_diameter: T) -> Result<Self> {
        let r_in = inner_diameter * T::half();
        match kind {
            ProfileKind::Circle => Self::circle(r_in),
            ProfileKind::RegularPolygon { sides } => {
                let n = T::from_usize_lossy(sides.max(1));
                Self::regular_polygon(sides, r_in / (T::PI() / n).cos())
            }
        }
    }

    pub fn sides(&self) -> Option<usize> {
        match self.kind {
            ProfileKind::Circle => None,
            ProfileKind::RegularPolygon { sides } => Some(sides),
        }
    }

    pub fn inradius(&self) -> T {
        match self.kind {
            ProfileKind::Circle => self.circumradius,
            ProfileKind::RegularPolygon { sides } => {
                self.circumradius * (T::PI() / T::from_usize_lossy(sides)).cos()
            }
        }
    }

    pub fn side_length(&self) -> Option<T> {
        self.sides().map(|n| {
            T::two() * self.circumradius * (T::PI() / T::from_usize_lossy(n)).sin()
        })
    }

    pub fn perimeter(&self) -> T {
        match self.kind {
            ProfileKind::Circle => T::TAU() * self.circumradius,
            ProfileKind::RegularPolygon { sides } => {
                T::from_usize_lossy(sides) * self.side_length().unwrap_or_else(T::zero)
            }
        }
    }

    /// Exterior angle between consecutive faces (polygons only).
    pub fn exterior_angle(&self) -> Option<T> {
        self.sides().map(|n| T::TAU() / T::from_usize_lossy(n))
    }

    fn vertex_angle(&self, k: i64, n: usize) -> T {
        let n_t = T::from_usize_lossy(n);
        -T::FRAC_PI_2() - T::PI() / n_t + T::TAU() * T::lit(k as f64) / n_t
    }

    /// Body-frame vertex `k` (index taken modulo the side count).
    pub fn vertex(&self, k: i64) -> Option<Vec2<T>> {
        self.sides()
            .map(|n| Vec2::from_angle(self.vertex_angle(k, n)) * self.circumradius)
    }

    pub fn vertices(&self) -> Vec<Vec2<T>> {
        match self.sides() {
            Some(n) => (0..n as i64).filter_map(|k| self.vertex(k)).collect(),
            None => Vec::new(),
        }
    }

    /// Outward normal angle of face `k` (between vertices `k` and `k + 1`).
    pub fn face_normal_angle(&self, k: i64) -> Option<T> {
        self.sides().map(|n| {
            -T::FRAC_PI_2() + T::TAU() * T::lit(k as f64) / T::from_usize_lossy(n)
        })
    }

    /// Support point in body direction `psi` (radians, unwrapped).
    ///
    /// On a face normal both face vertices are extremal; the higher-numbered
    /// one is returned. Rolling maps stay continuous across the switch because
    /// the arc parameter jumps by exactly one side length.
    pub fn support(&self, psi: T) -> Support<T> {
        match self.kind {
            ProfileKind::Circle => Support {
                point: Vec2::from_angle(psi) * self.circumradius,
                sigma: self.circumradius * (psi + T::FRAC_PI_2()),
                vertex: None,
            },
            ProfileKind::RegularPolygon { sides } => {
                let cell = T::TAU() / T::from_usize_lossy(sides);
                let k = ((psi + T::FRAC_PI_2()) / cell).floor().to_i64().unwrap_or(0) + 1;
                let side = self.side_length().unwrap_or_else(T::zero);
                Support {
                    point: Vec2::from_angle(self.vertex_angle(k, sides)) * self.circumradius,
                    sigma: side * T::lit(k as f64),
                    vertex: Some(k),
                }
            }
        }
    }

    /// Support function `h(psi) = max_p p . u(psi)`.
    pub fn support_value(&self, psi: T) -> T {
        self.support(psi).point.dot(Vec2::from_angle(psi))
    }

    /// Body-frame boundary point at arc parameter `sigma` (any real value).
    pub fn boundary_point(&self, sigma: T) -> Vec2<T> {
        let p = self.perimeter();
        let s = sigma - (sigma / p).floor() * p;
        match self.kind {
            ProfileKind::Circle => {
                Vec2::from_angle(s / self.circumradius - T::FRAC_PI_2()) * self.circumradius
            }
            ProfileKind::RegularPolygon { .. } => {
                let side = self.side_length().unwrap_or_else(T::one);
                let k = (s / side).floor();
                let frac = s / side - k;
                let ki = k.to_i64().unwrap_or(0);
                let a = self.vertex(ki).unwrap_or_else(Vec2::zero);
                let b = self.vertex(ki + 1).unwrap_or_else(Vec2::zero);
                a + (b - a) * frac
            }
        }
    }

    /// Angular distance from `psi` to the nearest face normal (polygons), else `None`.
    pub fn distance_to_face_normal(&self, psi: T) -> Option<(T, i64)> {
        self.sides().map(|n| {
            let cell = T::TAU() / T::from_usize_lossy(n);
            let u = (psi + T::FRAC_PI_2()) / cell;
            let k = u.round();
            (((u - k) * cell).abs(), k.to_i64().unwrap_or(0))
        })
    }
}
