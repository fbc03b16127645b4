//! Prismatic-palm feedback controller that keeps the two fingers parallel.
//!
//! All angles here live in the controller frame: the pulling finger is
//! treated as the left finger of a mirrored hand, so pulling always
//! increases `theta_pull` and parallel fingers have equal angles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GraspState, Side};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct ControllerConfig<T> {
    pub gain: T,
    /// Largest palm width change per control tick, mm.
    pub rate_limit: T,
    /// Nominal object distance along the fingers at perpendicular fingers, mm.
    pub l_mid: T,
    /// Pulling-finger angles closer than this to 0 or pi are rejected, rad.
    pub singular_guard: T,
    /// Gain scale factor applied when the width step reverses direction.
    pub reversal_backoff: T,
    /// Per-tick growth of the gain scale back towards 1.
    pub gain_recovery: T,
}

impl<T: Real> Default for ControllerConfig<T> {
    fn default() -> Self {
        Self {
            gain: T::lit(0.8),
            rate_limit: T::lit(2.0),
            l_mid: T::lit(85.0),
            singular_guard: T::lit(0.05),
            reversal_backoff: T::lit(0.25),
            gain_recovery: T::lit(1.05),
        }
    }
}

impl<T: Real> ControllerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gain >= T::zero()
            && self.rate_limit > T::zero()
            && self.l_mid > T::zero()
            && self.singular_guard > T::zero()
            && self.singular_guard < T::FRAC_PI_2()
            && self.reversal_backoff > T::zero()
            && self.reversal_backoff <= T::one()
            && self.gain_recovery >= T::one();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid controller settings: {self:?}")))
        }
    }
}

/// Controller view of the hand at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperState<T> {
    pub palm_width: T,
    pub theta_pull: T,
    pub theta_push: T,
    /// Always equal to `theta_pull`: the pushing finger should match it.
    pub theta_target: T,
    /// `theta_push - theta_target`.
    pub d_theta: T,
    /// Palm width correction from the last [`palm_correction`] evaluation.
    pub dw: T,
    /// Estimated object distance along the pushing finger.
    pub l: T,
    pub l_mid: T,
    pub l_roll: T,
    pub pull_role: Side,
}

impl<T: Real> GripperState<T> {
    pub fn new(palm_width: T, theta_pull: T, theta_push: T, l_mid: T, pull_role: Side) -> Self {
        let est = estimate_object_position(palm_width, theta_pull, l_mid);
        Self {
            palm_width,
            theta_pull,
            theta_push,
            theta_target: theta_pull,
            d_theta: theta_push - theta_pull,
            dw: T::zero(),
            l: est.l,
            l_mid,
            l_roll: est.l_roll,
            pull_role,
        }
    }

    /// Reads the controller inputs off a kinematic grasp state.
    pub fn from_grasp(grasp: &GraspState<T>, l_mid: T) -> Self {
        Self::new(
            grasp.palm_width,
            grasp.controller_angle(grasp.pull_angle()),
            grasp.controller_angle(grasp.push_angle()),
            l_mid,
            grasp.pull_side,
        )
    }

    /// Finger parallelism error in radians.
    pub fn parallel_error(&self) -> T {
        (self.theta_pull - self.theta_push).abs()
    }
}

/// Palm width error per unit finger angle error.
pub fn error_ratio<T: Real>(l: T, theta_pull: T, guard: T) -> Result<T> {
    check_angle(theta_pull, guard)?;
    Ok(-l / theta_pull.sin())
}

fn check_angle<T: Real>(theta: T, guard: T) -> Result<()> {
    if theta > guard && theta < T::PI() - guard {
        Ok(())
    } else {
        Err(Error::SingularAngle {
            angle: theta.as_f64(),
            guard: guard.as_f64(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectPosition<T> {
    pub l: T,
    /// Object travel along the fingers caused by the palm geometry.
    pub l_roll: T,
}

impl<T: Real> ObjectPosition<T> {
    /// Whether the estimate lies on the finger surface `[start, end]`.
    pub fn on_finger(&self, start: T, end: T) -> bool {
        self.l >= start && self.l <= end
    }
}

pub fn estimate_object_position<T: Real>(palm_width: T, theta_pull: T, l_mid: T) -> ObjectPosition<T> {
    let l_roll = palm_width * T::half() * theta_pull.cos();
    ObjectPosition {
        l: l_mid - l_roll,
        l_roll,
    }
}

/// Palm width correction for the state's angle error, in closed form.
pub fn palm_correction<T: Real>(state: &GripperState<T>, guard: T) -> Result<T> {
    let th = state.theta_pull;
    check_angle(th, guard)?;
    let (s, c) = th.sin_cos();
    Ok((state.palm_width * T::half() * c / s - state.l_mid / s) * state.d_theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickOutput<T> {
    pub command: T,
    pub dw: T,
    /// The command hit the palm travel limits.
    pub saturated: bool,
    pub rate_limited: bool,
}

/// One control update: `clamp(w + gain * dw)` with rate and travel limits.
pub fn controller_tick<T: Real>(
    state: &GripperState<T>,
    config: &ControllerConfig<T>,
    palm_min: T,
    palm_max: T,
) -> Result<TickOutput<T>> {
    let dw = palm_correction(state, config.singular_guard)?;
    let raw = config.gain * dw;
    let step = raw.max(-config.rate_limit).min(config.rate_limit);
    let wanted = state.palm_width + step;
    let command = wanted.max(palm_min).min(palm_max);
    Ok(TickOutput {
        command,
        dw,
        saturated: command != wanted,
        rate_limited: step != raw,
    })
}

/// Stateful wrapper around [`controller_tick`] that backs the gain off when
/// consecutive width steps reverse direction.
///
/// The closed-form correction assumes the object sits near `l_mid`. When it
/// rolls close to a fingertip or the finger base, the real angle response to
/// a width change can be several times larger than modelled and the plain
/// loop overshoots every tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalmController<T> {
    pub config: ControllerConfig<T>,
    pub palm_min: T,
    pub palm_max: T,
    scale: T,
    last_step: T,
}

impl<T: Real> PalmController<T> {
    pub fn new(config: ControllerConfig<T>, palm_min: T, palm_max: T) -> Self {
        Self {
            config,
            palm_min,
            palm_max,
            scale: T::one(),
            last_step: T::zero(),
        }
    }

    /// Current multiplier on the configured gain.
    pub fn gain_scale(&self) -> T {
        self.scale
    }

    pub fn tick(&mut self, state: &GripperState<T>) -> Result<TickOutput<T>> {
        let cfg = &self.config;
        let dw = palm_correction(state, cfg.singular_guard)?;
        let floor = cfg.rate_limit * T::lit(0.05);
        let raw = cfg.gain * dw;
        if raw.abs() > floor && self.last_step.abs() > floor && raw.signum() != self.last_step.signum() {
            self.scale = (self.scale * cfg.reversal_backoff).max(T::lit(1.0 / 64.0));
        } else {
            self.scale = (self.scale * cfg.gain_recovery).min(T::one());
        }
        let scaled = ControllerConfig {
            gain: cfg.gain * self.scale,
            ..*cfg
        };
        let out = controller_tick(state, &scaled, self.palm_min, self.palm_max)?;
        self.last_step = out.command - state.palm_width;
        Ok(out)
    }
}

/// Checks that the palm never dithers: within any `window` consecutive width
/// increments, the increments larger than `threshold` change sign at most once.
///
/// A single reversal is ordinary motion (the palm opens, then closes); two or
/// more inside one window is back-and-forth hunting.
pub fn is_oscillation_free<T: Real>(widths: &[T], window: usize, threshold: T) -> bool {
    first_oscillation(widths, window, threshold).is_none()
}

/// Index of the increment that completes the first oscillating window, if any.
pub fn first_oscillation<T: Real>(widths: &[T], window: usize, threshold: T) -> Option<usize> {
    let window = window.max(1);
    let steps: Vec<(usize, bool)> = widths
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let d = w[1] - w[0];
            (d.abs() > threshold).then_some((i, d > T::zero()))
        })
        .collect();
    for (j, &(first, _)) in steps.iter().enumerate() {
        let mut changes = 0;
        for pair in steps[j..].windows(2) {
            if pair[1].0 - first >= window {
                break;
            }
            if pair[1].1 != pair[0].1 {
                changes += 1;
                if changes >= 2 {
                    return Some(pair[1].0);
                }
            }
        }
    }
    None
}

/// [`first_oscillation`] restricted to the closed-loop regime near
/// perpendicular fingers: only stretches of ticks whose pulling angle lies
/// within `half_band` of pi/2 are examined, each stretch on its own.
///
/// Returns the width index that completes the first oscillating window.
pub fn first_oscillation_near_perpendicular<T: Real>(
    widths: &[T],
    theta_pull: &[T],
    half_band: T,
    window: usize,
    threshold: T,
) -> Option<usize> {
    let n = widths.len().min(theta_pull.len());
    let inside = |i: usize| (theta_pull[i] - T::FRAC_PI_2()).abs() <= half_band;
    let mut i = 0;
    while i < n {
        if !inside(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && inside(i) {
            i += 1;
        }
        if let Some(k) = first_oscillation(&widths[start..i], window, threshold) {
            return Some(start + k);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};

    #[test]
    fn error_ratio_examples() {
        assert_relative_eq!(error_ratio(85.0, FRAC_PI_2, 0.05).unwrap(), -85.0);
        assert_relative_eq!(error_ratio(85.0, FRAC_PI_6, 0.05).unwrap(), -170.0, max_relative = 1e-12);
        assert_relative_eq!(error_ratio(42.5, FRAC_PI_2, 0.05).unwrap(), -42.5);
        assert!(matches!(
            error_ratio(85.0, 0.01, 0.05),
            Err(Error::SingularAngle { .. })
        ));
    }

    #[test]
    fn object_position_examples() {
        let p = estimate_object_position(100.0, FRAC_PI_2, 85.0);
        assert_relative_eq!(p.l, 85.0, epsilon = 1e-12);
        assert_relative_eq!(p.l_roll, 0.0, epsilon = 1e-12);
        assert_relative_eq!(estimate_object_position(100.0, FRAC_PI_3, 85.0).l, 60.0, epsilon = 1e-12);
        assert_relative_eq!(estimate_object_position(68.5, FRAC_PI_2, 85.0).l, 85.0, epsilon = 1e-12);
        assert!(!estimate_object_position(150.0, 0.1, 20.0).on_finger(19.0, 151.0));
        assert!(estimate_object_position(100.0, 1.2, 85.0).on_finger(19.0, 151.0));
    }

    fn state(w: f64, th: f64, d_theta: f64) -> GripperState<f64> {
        GripperState::new(w, th, th + d_theta, 85.0, Side::Left)
    }

    #[test]
    fn correction_examples() {
        assert_relative_eq!(palm_correction(&state(100.0, FRAC_PI_2, 0.01), 0.05).unwrap(), -0.85, epsilon = 1e-12);
        assert_eq!(palm_correction(&state(80.0, 1.2, 0.0), 0.05).unwrap(), 0.0);
        let dw = palm_correction(&state(100.0, FRAC_PI_3, 0.02), 0.05).unwrap();
        // 50 cot(60) - 85 csc(60) = (50 - 170) / sqrt(3)
        assert_relative_eq!(dw, -120.0 / 3f64.sqrt() * 0.02, max_relative = 1e-12);
        assert_relative_eq!(dw, -1.3856406460551018, max_relative = 1e-12);
    }

    #[test]
    fn tick_without_error_holds_width() {
        let out = controller_tick(&state(90.0, 1.4, 0.0), &ControllerConfig::default(), 50.0, 150.0).unwrap();
        assert_eq!(out.command, 90.0);
        assert!(!out.saturated);
    }

    #[test]
    fn tick_clamps_to_palm_range() {
        let cfg = ControllerConfig {
            rate_limit: 10.0,
            ..ControllerConfig::default()
        };
        let out = controller_tick(&state(149.0, FRAC_PI_2, -0.1), &cfg, 50.0, 150.0).unwrap();
        assert_eq!(out.command, 150.0);
        assert!(out.saturated);
        let out = controller_tick(&state(100.0, FRAC_PI_2, -0.5), &ControllerConfig::default(), 50.0, 150.0).unwrap();
        assert_eq!(out.command, 102.0);
        assert!(out.rate_limited && !out.saturated);
    }

    #[test]
    fn oscillation_detector() {
        let smooth: Vec<f64> = (0..50).map(|i| 70.0 + 0.3 * i as f64).collect();
        assert!(is_oscillation_free(&smooth, 10, 0.1));
        let zigzag: Vec<f64> = (0..50).map(|i| 70.0 + if i % 2 == 0 { 0.0 } else { 0.5 }).collect();
        assert_eq!(first_oscillation(&zigzag, 10, 0.1), Some(2));
        // up, down, down, up inside one window still hunts
        let hunt = [70.0, 70.5, 70.0, 69.5, 70.0, 70.0];
        assert_eq!(first_oscillation(&hunt, 10, 0.1), Some(3));
        // the same pattern spread wider than the window is fine
        let mut spread = vec![70.0, 70.5];
        spread.extend(std::iter::repeat_n(70.5, 6));
        spread.push(70.0);
        spread.extend(std::iter::repeat_n(70.0, 6));
        spread.push(70.5);
        assert!(is_oscillation_free(&spread, 10, 0.1));
        // a single cusp-like reversal is not hunting
        let cusp = [70.0, 70.3, 70.6, 70.3, 70.0];
        assert!(is_oscillation_free(&cusp, 10, 0.1));
        // a single reversal far apart is fine
        let mut slow: Vec<f64> = (0..20).map(|i| 70.0 + 0.2 * i as f64).collect();
        slow.extend(vec![*slow.last().unwrap(); 10]);
        let top = *slow.last().unwrap();
        slow.extend((1..20).map(|i| top - 0.2 * i as f64));
        assert!(is_oscillation_free(&slow, 10, 0.1));
        // small dither below the threshold is ignored
        let dither: Vec<f64> = (0..50).map(|i| 70.0 + 0.05 * (i % 2) as f64).collect();
        assert!(is_oscillation_free(&dither, 10, 0.1));
    }

    #[test]
    fn banded_oscillation_ignores_far_angles() {
        let zigzag: Vec<f64> = (0..40).map(|i| 70.0 + if i % 2 == 0 { 0.0 } else { 0.5 }).collect();
        let far = vec![0.8; 40];
        assert_eq!(first_oscillation_near_perpendicular(&zigzag, &far, 0.35, 10, 0.1), None);
        let mut theta = far.clone();
        for t in theta.iter_mut().skip(20) {
            *t = FRAC_PI_2;
        }
        assert_eq!(first_oscillation_near_perpendicular(&zigzag, &theta, 0.35, 10, 0.1), Some(22));
    }
}
