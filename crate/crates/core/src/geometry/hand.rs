use serde::{Deserialize, Serialize};

use super::finger::{Facing, FingerLine, Pose};
use super::profile::ConvexProfile;
use super::rolling::{measure_contact, place_on_finger, solve_roll, ContactState, RotaryFinger};
use crate::error::{Error, Result};
use crate::numeric::Vec2;
use crate::scalar::Real;

/// Maximum pulling-finger rotation accepted by a single [`roll_step`].
pub const MAX_STEP_RAD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

/// Fixed mechanical dimensions of the two-finger hand with a prismatic palm.
///
/// The palm frame has +x along the palm and +y toward the fingertips; the
/// joints sit at `(-w/2, 0)` and `(w/2, 0)`. Finger angles are measured
/// counter-clockwise from +x, so both fingers read `pi/2` when perpendicular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct HandGeometry<T> {
    pub finger_length: T,
    /// Distance from the joint to the middle of the finger surface, measured along the finger.
    pub finger_midpoint: T,
    /// Joint axis to contact surface, sensing finger (sensor stack side).
    pub sensing_surface_offset: T,
    /// Joint axis to contact surface, high-friction finger.
    pub friction_surface_offset: T,
    pub palm_min: T,
    pub palm_max: T,
    pub sensing_side: Side,
}

impl<T: Real> Default for HandGeometry<T> {
    fn default() -> Self {
        Self {
            finger_length: T::lit(132.0),
            finger_midpoint: T::lit(85.0),
            sensing_surface_offset: T::lit(32.0),
            friction_surface_offset: T::lit(6.5),
            palm_min: T::lit(50.0),
            palm_max: T::lit(150.0),
            sensing_side: Side::Left,
        }
    }
}

impl<T: Real> HandGeometry<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.finger_length > T::zero()
            && self.finger_start() >= T::zero()
            && self.sensing_surface_offset >= T::zero()
            && self.friction_surface_offset >= T::zero()
            && self.palm_min > T::zero()
            && self.palm_max > self.palm_min;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("inconsistent hand geometry: {self:?}")))
        }
    }

    /// Finger coordinate of the fingertip-side end of the contact surface.
    pub fn finger_end(&self) -> T {
        self.finger_start() + self.finger_length
    }

    /// Finger coordinate of the palm-side end of the contact surface.
    pub fn finger_start(&self) -> T {
        self.finger_midpoint - self.finger_length * T::half()
    }

    pub fn surface_offset(&self, side: Side) -> T {
        if side == self.sensing_side {
            self.sensing_surface_offset
        } else {
            self.friction_surface_offset
        }
    }

    pub fn joint(&self, side: Side, palm_width: T) -> Vec2<T> {
        match side {
            Side::Left => Vec2::new(-palm_width * T::half(), T::zero()),
            Side::Right => Vec2::new(palm_width * T::half(), T::zero()),
        }
    }

    pub fn rotary_finger(&self, side: Side, palm_width: T, angle_hint: T) -> RotaryFinger<T> {
        RotaryFinger {
            joint: self.joint(side, palm_width),
            surface_offset: self.surface_offset(side),
            start: self.finger_start(),
            length: self.finger_length,
            facing: match side {
                Side::Left => Facing::Right,
                Side::Right => Facing::Left,
            },
            angle_hint,
        }
    }

    pub fn finger_line(&self, side: Side, angle: T, palm_width: T) -> FingerLine<T> {
        self.rotary_finger(side, palm_width, angle).line_at(angle)
    }

    /// Mirror image of the hand (sensing finger on the other side).
    pub fn mirrored(&self) -> Self {
        Self {
            sensing_side: self.sensing_side.other(),
            ..*self
        }
    }
}

/// Complete kinematic configuration of hand and object at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspState<T> {
    pub palm_width: T,
    /// World finger angles indexed by [`Side::index`].
    pub finger_angles: [T; 2],
    pub pull_side: Side,
    pub contact: ContactState<T>,
}

impl<T: Real> GraspState<T> {
    pub fn push_side(&self) -> Side {
        self.pull_side.other()
    }

    pub fn angle(&self, side: Side) -> T {
        self.finger_angles[side.index()]
    }

    pub fn pull_angle(&self) -> T {
        self.angle(self.pull_side)
    }

    pub fn push_angle(&self) -> T {
        self.angle(self.push_side())
    }

    pub fn contact_on(&self, side: Side) -> &super::rolling::RollingContact<T> {
        if side == self.pull_side {
            &self.contact.pull
        } else {
            &self.contact.push
        }
    }

    /// Contact distance along the pushing finger, measured from its surface base.
    pub fn push_contact_distance(&self) -> T {
        self.contact.push.finger_coord
    }

    /// Same configuration with pulling and pushing roles exchanged.
    pub fn with_roles_swapped(&self) -> Self {
        Self {
            pull_side: self.push_side(),
            contact: self.contact.swapped(),
            ..*self
        }
    }

    /// Converts a world finger angle into the frame where the pulling finger
    /// sits on the left, so pulling always increases the angle.
    pub fn controller_angle(&self, world: T) -> T {
        match self.pull_side {
            Side::Left => world,
            Side::Right => T::PI() - world,
        }
    }

    /// Inverse of [`Self::controller_angle`] for angle increments.
    pub fn world_delta(&self, controller_delta: T) -> T {
        match self.pull_side {
            Side::Left => controller_delta,
            Side::Right => -controller_delta,
        }
    }
}

/// Places the object between perpendicular fingers.
///
/// `sensing_height` is where the object would touch the sensing finger with
/// both fingers perpendicular. With `palm_width = None` the palm closes to
/// fit the object exactly; with a wider fixed palm the pushing finger tilts
/// inward until it touches.
pub fn grasp<T: Real>(
    profile: &ConvexProfile<T>,
    hand: &HandGeometry<T>,
    orientation: T,
    sensing_height: T,
    palm_width: Option<T>,
    pull_side: Side,
) -> Result<GraspState<T>> {
    hand.validate()?;
    let upright = T::FRAC_PI_2();
    let extent_right = profile.support_value(-orientation);
    let extent_left = profile.support_value(T::PI() - orientation);
    let fit = extent_left
        + extent_right
        + hand.surface_offset(Side::Left)
        + hand.surface_offset(Side::Right);
    let w = palm_width.unwrap_or(fit);
    if w < hand.palm_min || w > hand.palm_max {
        return Err(Error::GraspLost(format!(
            "palm width {:.3} mm outside [{}, {}]",
            w.as_f64(),
            hand.palm_min,
            hand.palm_max
        )));
    }
    if w < fit - T::lit(1e-9) {
        return Err(Error::GraspLost(format!(
            "object ({:.3} mm with finger offsets) does not fit a {:.3} mm palm",
            fit.as_f64(),
            w.as_f64()
        )));
    }

    let push_side = pull_side.other();
    let pull_line = hand.finger_line(pull_side, upright, w);
    // Height of the object centre that puts the sensing-side extreme point at `sensing_height`.
    let sense_dir = match hand.sensing_side {
        Side::Left => T::PI(),
        Side::Right => T::zero(),
    };
    let sense_point = profile.support(sense_dir - orientation).point.rotate(orientation);
    let centre_y = sensing_height - sense_point.y;
    let psi_pull = pull_line.body_contact_direction(orientation);
    let s_pull = profile.support(psi_pull);
    let t_pull = centre_y + s_pull.point.rotate(orientation).y - pull_line.base.y;
    let invariant = t_pull - pull_line.handedness() * s_pull.sigma;
    let pose = place_on_finger(profile, &pull_line, invariant, psi_pull, orientation);

    let push = hand.rotary_finger(push_side, w, upright);
    let push_line = super::rolling::PushFinger::touch(&push, profile, &pose)
        .ok_or_else(|| Error::GraspLost("pushing finger cannot reach the object".into()))?;
    let pull_c = measure_contact(profile, &pose, &pull_line, psi_pull, Some(invariant));
    let push_c = measure_contact(
        profile,
        &pose,
        &push_line,
        push_line.body_contact_direction(orientation),
        None,
    );
    let mut angles = [upright; 2];
    angles[push_side.index()] = push_line.angle;
    Ok(GraspState {
        palm_width: w,
        finger_angles: angles,
        pull_side,
        contact: ContactState {
            pose: Pose { ..pose },
            pull: pull_c,
            push: push_c,
        },
    })
}

/// Advances the grasp by rotating the pulling finger by `pull_angle_delta`
/// (world radians) while the palm moves to `palm_width`.
///
/// The pushing finger is torque-controlled: it follows the object, so its
/// angle comes out of the solve. Both contacts roll without slip.
pub fn roll_step<T: Real>(
    profile: &ConvexProfile<T>,
    hand: &HandGeometry<T>,
    state: &GraspState<T>,
    pull_angle_delta: T,
    palm_width: T,
) -> Result<GraspState<T>> {
    if pull_angle_delta.abs() > T::lit(MAX_STEP_RAD) * (T::one() + T::lit(1e-9)) {
        return Err(Error::StepTooLarge(format!(
            "pulling finger step {:.5} rad exceeds {MAX_STEP_RAD} rad",
            pull_angle_delta.as_f64()
        )));
    }
    if palm_width < hand.palm_min || palm_width > hand.palm_max {
        return Err(Error::GraspLost(format!(
            "palm width {:.3} mm outside [{}, {}]",
            palm_width.as_f64(),
            hand.palm_min,
            hand.palm_max
        )));
    }
    if pull_angle_delta == T::zero() && palm_width == state.palm_width {
        return Ok(*state);
    }
    let pull_angle = state.pull_angle() + pull_angle_delta;
    if pull_angle <= T::zero() || pull_angle >= T::PI() {
        return Err(Error::GraspLost("pulling finger left (0, pi)".into()));
    }
    let pull_line = hand.finger_line(state.pull_side, pull_angle, palm_width);
    let push = hand.rotary_finger(state.push_side(), palm_width, state.push_angle());
    let scale = profile.inradius().max(T::one());
    let span = T::lit(4.0) * pull_angle_delta.abs()
        + T::lit(2.0) * (palm_width - state.palm_width).abs() / scale;
    let sol = solve_roll(profile, &state.contact, &pull_line, &push, span)?;
    let mut angles = state.finger_angles;
    angles[state.pull_side.index()] = pull_angle;
    angles[state.push_side().index()] = sol.push_line.angle;
    Ok(GraspState {
        palm_width,
        finger_angles: angles,
        pull_side: state.pull_side,
        contact: sol.state,
    })
}
