use serde::{Deserialize, Serialize};

use super::profile::ConvexProfile;
use crate::error::{Error, Result};
use crate::numeric::Vec2;
use crate::scalar::Real;

/// Rigid planar pose: translation of the centroid plus orientation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose<T> {
    pub position: Vec2<T>,
    pub angle: T,
}

impl<T: Real> Pose<T> {
    pub fn new(x: T, y: T, angle: T) -> Self {
        Self {
            position: Vec2::new(x, y),
            angle,
        }
    }

    /// Maps a body-frame point to the world.
    pub fn apply(&self, body: Vec2<T>) -> Vec2<T> {
        self.position + body.rotate(self.angle)
    }
}

/// Which side of the finger direction the object lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Facing {
    /// Object on the counter-clockwise side of the finger direction.
    Left,
    Right,
}

/// Contact surface of a finger: the line through `base` along `angle`.
///
/// Coordinates along the line are measured from `base`; the physical
/// surface covers `[start, start + length]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerLine<T> {
    pub base: Vec2<T>,
    pub angle: T,
    pub start: T,
    pub length: T,
    pub facing: Facing,
}

impl<T: Real> FingerLine<T> {
    pub fn new(base: Vec2<T>, angle: T, length: T, facing: Facing) -> Self {
        Self {
            base,
            angle,
            start: T::zero(),
            length,
            facing,
        }
    }

    /// Whether finger coordinate `t` lies on the physical surface.
    pub fn covers(&self, t: T) -> bool {
        t >= self.start && t <= self.start + self.length
    }

    pub fn direction(&self) -> Vec2<T> {
        Vec2::from_angle(self.angle)
    }

    /// Unit normal pointing from the finger surface into the object side.
    pub fn inward_normal(&self) -> Vec2<T> {
        match self.facing {
            Facing::Left => self.direction().perp(),
            Facing::Right => -self.direction().perp(),
        }
    }

    /// `+1` when (direction, inward normal) is a right-handed frame.
    pub fn handedness(&self) -> T {
        match self.facing {
            Facing::Left => T::one(),
            Facing::Right => -T::one(),
        }
    }

    /// Distance of `p` along the finger from `base`.
    pub fn coordinate(&self, p: Vec2<T>) -> T {
        (p - self.base).dot(self.direction())
    }

    /// Signed distance of `p` from the surface, positive on the object side.
    pub fn clearance(&self, p: Vec2<T>) -> T {
        (p - self.base).dot(self.inward_normal())
    }

    pub fn point_at(&self, t: T) -> Vec2<T> {
        self.base + self.direction() * t
    }

    /// Body-frame direction (for an object at orientation `angle`) pointing into this finger.
    pub fn body_contact_direction(&self, object_angle: T) -> T {
        (-self.inward_normal()).angle() - object_angle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContactKind {
    Vertex,
    Face,
    CircularArc,
}

/// Result of a support-function contact query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportContact<T> {
    pub point: Vec2<T>,
    /// Distance along the finger from its base.
    pub finger_coord: T,
    /// Boundary arc parameter in `[0, perimeter)`.
    pub sigma: T,
    pub clearance: T,
    pub kind: ContactKind,
    /// Full tangent segment for face contacts.
    pub segment: Option<(Vec2<T>, Vec2<T>)>,
}

/// Clearance below which a neighbouring polygon vertex counts as flush.
pub fn face_tolerance<T: Real>(profile: &ConvexProfile<T>) -> T {
    T::length_tol() * profile.circumradius.max(T::one())
}

/// Extreme point of the posed profile toward `line`, classified by contact type.
///
/// Fails with [`Error::NoContact`] when the object clears the line by more than
/// `tol` and with [`Error::Penetration`] when it sinks deeper than `tol`.
pub fn support_contact<T: Real>(
    profile: &ConvexProfile<T>,
    pose: &Pose<T>,
    line: &FingerLine<T>,
    tol: T,
) -> Result<SupportContact<T>> {
    let psi = line.body_contact_direction(pose.angle);
    let s = profile.support(psi);
    let point = pose.apply(s.point);
    let clearance = line.clearance(point);
    if clearance > tol {
        return Err(Error::NoContact {
            clearance: clearance.as_f64(),
        });
    }
    if clearance < -tol {
        return Err(Error::Penetration {
            clearance: clearance.as_f64(),
        });
    }
    let perimeter = profile.perimeter();
    let wrap = |x: T| x - (x / perimeter).floor() * perimeter;
    let (kind, segment, sigma) = match s.vertex {
        None => (ContactKind::CircularArc, None, wrap(s.sigma)),
        Some(k) => {
            let flush = face_tolerance(profile);
            let side = profile.side_length().unwrap_or_else(T::zero);
            let mut out = (ContactKind::Vertex, None, wrap(s.sigma));
            for (nb, first) in [(k - 1, k - 1), (k + 1, k)] {
                if let Some(v) = profile.vertex(nb) {
                    let q = pose.apply(v);
                    if (line.clearance(q) - clearance).abs() <= flush {
                        let a = pose.apply(profile.vertex(first).unwrap_or(v));
                        let b = pose.apply(profile.vertex(first + 1).unwrap_or(v));
                        out = (
                            ContactKind::Face,
                            Some((a, b)),
                            wrap(side * T::lit(first as f64)),
                        );
                        break;
                    }
                }
            }
            out
        }
    };
    Ok(SupportContact {
        point,
        finger_coord: line.coordinate(point),
        sigma,
        clearance,
        kind,
        segment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn floor_line() -> FingerLine<f64> {
        FingerLine::new(Vec2::new(-100.0, 0.0), 0.0, 200.0, Facing::Left)
    }

    #[test]
    fn circle_tangent_to_floor() {
        let c = ConvexProfile::circle(15.0).unwrap();
        let pose = Pose::new(0.0, 15.0, 0.3);
        let sc = support_contact(&c, &pose, &floor_line(), 1e-9).unwrap();
        assert_relative_eq!(sc.point.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(sc.point.y, 0.0, epsilon = 1e-12);
        assert_eq!(sc.kind, ContactKind::CircularArc);
    }

    #[test]
    fn flat_square_gives_face_segment() {
        let sq = ConvexProfile::from_inner_diameter(
            super::super::ProfileKind::RegularPolygon { sides: 4 },
            30.0,
        )
        .unwrap();
        let pose = Pose::new(0.0, 15.0, 0.0);
        let sc = support_contact(&sq, &pose, &floor_line(), 1e-9).unwrap();
        assert_eq!(sc.kind, ContactKind::Face);
        let (a, b) = sc.segment.unwrap();
        assert_relative_eq!((b - a).norm(), 30.0, epsilon = 1e-9);
        assert_relative_eq!(a.y, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn rotated_square_touches_at_lowest_vertex() {
        let sq = ConvexProfile::from_inner_diameter(
            super::super::ProfileKind::RegularPolygon { sides: 4 },
            30.0,
        )
        .unwrap();
        let angle = 10f64.to_radians();
        // Brute force: densely sample the boundary and find the lowest point.
        let n = 200_000;
        let mut lowest = Vec2::new(0.0, f64::INFINITY);
        for i in 0..n {
            let p = sq.boundary_point(sq.perimeter() * i as f64 / n as f64).rotate(angle);
            if p.y < lowest.y {
                lowest = p;
            }
        }
        let pose = Pose::new(0.0, -lowest.y, angle);
        let sc = support_contact(&sq, &pose, &floor_line(), 1e-9).unwrap();
        assert_eq!(sc.kind, ContactKind::Vertex);
        assert_relative_eq!(sc.point.x, lowest.x, epsilon = 1e-3);
        assert_relative_eq!(sc.point.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lifted_object_reports_no_contact() {
        let c = ConvexProfile::circle(15.0).unwrap();
        let pose = Pose::new(0.0, 16.0, 0.0);
        assert!(matches!(
            support_contact(&c, &pose, &floor_line(), 1e-9),
            Err(Error::NoContact { .. })
        ));
        let sunk = Pose::new(0.0, 14.0, 0.0);
        assert!(matches!(
            support_contact(&c, &sunk, &floor_line(), 1e-9),
            Err(Error::Penetration { .. })
        ));
    }

    #[test]
    fn handedness_matches_normal() {
        for facing in [Facing::Left, Facing::Right] {
            let l = FingerLine::new(Vec2::zero(), 0.7f64, 1.0, facing);
            assert_relative_eq!(l.direction().cross(l.inward_normal()), l.handedness());
        }
    }
}
