//! No-slip rolling of a convex profile pinched between two finger surfaces.
//!
//! Rolling on a line without slip conserves `t - chi * sigma` per contact, where
//! `t` is the contact position along the finger, `sigma` the unwrapped boundary
//! arc parameter of the contact point and `chi` the handedness of the finger
//! frame. Given the object orientation, that invariant pins the object pose
//! relative to the pulling finger; the pushing finger then has to touch the
//! object and satisfy its own invariant, which leaves one scalar equation in
//! the orientation.

use serde::{Deserialize, Serialize};

use super::finger::{face_tolerance, ContactKind, FingerLine, Pose};
use super::profile::ConvexProfile;
use crate::error::{Error, Result};
use crate::numeric::{root_near, Vec2};
use crate::scalar::{wrap_angle, Real};

/// State of one rolling contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingContact<T> {
    /// Conserved `t - chi * sigma`.
    pub invariant: T,
    /// Unwrapped body-frame direction of the contact normal.
    pub psi: T,
    /// Unwrapped boundary arc parameter of the contact point.
    pub sigma: T,
    /// Contact position along the finger, measured from the finger base.
    pub finger_coord: T,
    pub kind: ContactKind,
    /// Unwrapped boundary interval in contact right now (a face spans one side).
    pub touched: (T, T),
    /// Clearance of the contact point after solving.
    pub clearance: T,
}

/// Object pose with both rolling contacts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactState<T> {
    pub pose: Pose<T>,
    pub pull: RollingContact<T>,
    pub push: RollingContact<T>,
}

impl<T: Real> ContactState<T> {
    /// Exchanges pulling and pushing contacts.
    pub fn swapped(&self) -> Self {
        Self {
            pose: self.pose,
            pull: self.push,
            push: self.pull,
        }
    }
}

fn unwrap_near<T: Real>(raw: T, hint: T) -> T {
    hint + wrap_angle(raw - hint)
}

/// Builds a contact record for the support point of `pose` toward `line`.
///
/// `psi_hint` selects the unwrapping branch; `invariant` is recomputed when `None`.
pub fn measure_contact<T: Real>(
    profile: &ConvexProfile<T>,
    pose: &Pose<T>,
    line: &FingerLine<T>,
    psi_hint: T,
    invariant: Option<T>,
) -> RollingContact<T> {
    let psi = unwrap_near(line.body_contact_direction(pose.angle), psi_hint);
    let s = profile.support(psi);
    let point = pose.apply(s.point);
    let t = line.coordinate(point);
    let clearance = line.clearance(point);
    let chi = line.handedness();
    let (kind, touched) = match s.vertex {
        None => (ContactKind::CircularArc, (s.sigma, s.sigma)),
        Some(k) => {
            let side = profile.side_length().unwrap_or_else(T::zero);
            let flush = face_tolerance(profile);
            let prev = profile.vertex(k - 1).map(|v| line.clearance(pose.apply(v)));
            let next = profile.vertex(k + 1).map(|v| line.clearance(pose.apply(v)));
            if prev.is_some_and(|c| (c - clearance).abs() <= flush) {
                (ContactKind::Face, (s.sigma - side, s.sigma))
            } else if next.is_some_and(|c| (c - clearance).abs() <= flush) {
                (ContactKind::Face, (s.sigma, s.sigma + side))
            } else {
                (ContactKind::Vertex, (s.sigma, s.sigma))
            }
        }
    };
    RollingContact {
        invariant: invariant.unwrap_or(t - chi * s.sigma),
        psi,
        sigma: s.sigma,
        finger_coord: t,
        kind,
        touched,
        clearance,
    }
}

/// Places the object in rolling contact with `line` at orientation `angle`.
pub fn place_on_finger<T: Real>(
    profile: &ConvexProfile<T>,
    line: &FingerLine<T>,
    invariant: T,
    psi_hint: T,
    angle: T,
) -> Pose<T> {
    let psi = unwrap_near(line.body_contact_direction(angle), psi_hint);
    let s = profile.support(psi);
    let t = invariant + line.handedness() * s.sigma;
    let contact = line.point_at(t);
    Pose {
        position: contact - s.point.rotate(angle),
        angle,
    }
}

/// How the pushing finger closes onto the object.
pub trait PushFinger<T: Real> {
    /// Finger surface touching the object at `pose`, or `None` if it cannot reach it.
    fn touch(&self, profile: &ConvexProfile<T>, pose: &Pose<T>) -> Option<FingerLine<T>>;
}

/// A finger surface whose placement is prescribed.
#[derive(Debug, Clone, Copy)]
pub struct PrescribedFinger<T>(pub FingerLine<T>);

impl<T: Real> PushFinger<T> for PrescribedFinger<T> {
    fn touch(&self, _profile: &ConvexProfile<T>, _pose: &Pose<T>) -> Option<FingerLine<T>> {
        Some(self.0)
    }
}

/// A finger on a revolute joint that rotates until its surface touches the object.
#[derive(Debug, Clone, Copy)]
pub struct RotaryFinger<T> {
    pub joint: Vec2<T>,
    /// Distance from the joint axis to the contact surface.
    pub surface_offset: T,
    /// Finger coordinate where the contact surface begins.
    pub start: T,
    pub length: T,
    pub facing: super::finger::Facing,
    /// Angle to search around (usually the previous angle).
    pub angle_hint: T,
}

impl<T: Real> RotaryFinger<T> {
    pub fn line_at(&self, angle: T) -> FingerLine<T> {
        let mut line = FingerLine::new(self.joint, angle, self.length, self.facing);
        line.base = self.joint + line.inward_normal() * self.surface_offset;
        line.start = self.start;
        line
    }
}

impl<T: Real> PushFinger<T> for RotaryFinger<T> {
    fn touch(&self, profile: &ConvexProfile<T>, pose: &Pose<T>) -> Option<FingerLine<T>> {
        let gap = |angle: T| {
            let line = self.line_at(angle);
            let s = profile.support(line.body_contact_direction(pose.angle));
            line.clearance(pose.apply(s.point))
        };
        let guard = T::lit(1e-6);
        let angle = root_near(
            gap,
            self.angle_hint,
            T::lit(1e-3),
            guard,
            T::PI() - guard,
            T::PI(),
            T::angle_tol() * T::lit(1e-3),
        )?;
        Some(self.line_at(angle))
    }
}

/// Result of a rolling solve: contacts plus the pushing finger surface that was found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollSolution<T> {
    pub state: ContactState<T>,
    pub push_line: FingerLine<T>,
}

/// Advances a rolling configuration to a new pulling-finger placement.
///
/// `orientation_span` bounds the initial bracket for the orientation search;
/// it should be a few times the expected object rotation for the step.
pub fn solve_roll<T: Real, P: PushFinger<T>>(
    profile: &ConvexProfile<T>,
    prev: &ContactState<T>,
    pull_line: &FingerLine<T>,
    push: &P,
    orientation_span: T,
) -> Result<RollSolution<T>> {
    let residual = |angle: T| -> T {
        let pose = place_on_finger(profile, pull_line, prev.pull.invariant, prev.pull.psi, angle);
        let Some(line) = push.touch(profile, &pose) else {
            return T::nan();
        };
        let c = measure_contact(profile, &pose, &line, prev.push.psi, Some(prev.push.invariant));
        c.finger_coord - (c.invariant + line.handedness() * c.sigma)
    };
    let span = orientation_span.max(T::lit(1e-7));
    let angle = root_near(
        residual,
        prev.pose.angle,
        span,
        prev.pose.angle - T::PI(),
        prev.pose.angle + T::PI(),
        T::FRAC_PI_2(),
        T::angle_tol(),
    )
    .ok_or_else(|| Error::StepTooLarge("no-slip orientation solve did not converge".into()))?;

    let pose = place_on_finger(profile, pull_line, prev.pull.invariant, prev.pull.psi, angle);
    let push_line = push
        .touch(profile, &pose)
        .ok_or_else(|| Error::GraspLost("pushing finger cannot reach the object".into()))?;
    let pull = measure_contact(profile, &pose, pull_line, prev.pull.psi, Some(prev.pull.invariant));
    let push_c = measure_contact(profile, &pose, &push_line, prev.push.psi, Some(prev.push.invariant));
    for (name, line, c) in [("pulling", pull_line, &pull), ("pushing", &push_line, &push_c)] {
        if !line.covers(c.finger_coord) {
            return Err(Error::GraspLost(format!(
                "contact left the {name} finger at {:.3} mm",
                c.finger_coord.as_f64()
            )));
        }
    }
    Ok(RollSolution {
        state: ContactState {
            pose,
            pull,
            push: push_c,
        },
        push_line,
    })
}

/// Boundary length of the object that touched one finger over a trace.
///
/// Touched intervals are unioned on the unwrapped arc parameter, so rolling
/// back over already-touched boundary adds nothing. Capped at the perimeter.
pub fn contact_arc_length<'a, T: Real + 'a>(
    profile: &ConvexProfile<T>,
    contacts: impl IntoIterator<Item = &'a RollingContact<T>>,
) -> T {
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for c in contacts {
        lo = lo.min(c.touched.0);
        hi = hi.max(c.touched.1);
    }
    if hi < lo {
        return T::zero();
    }
    (hi - lo).min(profile.perimeter())
}
