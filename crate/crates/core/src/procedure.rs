//! The scripted rolling procedure, sampled at the logging rate.
//!
//! One run: both fingers start perpendicular with the sensing finger pushing;
//! the other finger pulls outward, the roles swap and the new pulling finger
//! sweeps twice as far the other way, then the roles swap back and the
//! pulling finger returns to perpendicular. Short dwells separate the moves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{
    contact_arc_length, grasp, roll_step, ConvexProfile, GraspState, HandGeometry, ProfileKind,
    RollingContact, Side,
};
use crate::palm_control::{ControllerConfig, GripperState, PalmController};
use crate::scalar::Real;
use crate::sensor_model::{contact_force, contact_load, SensorArray, SensorConfig, SensorFrame};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Object classes, in class-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Hexagon,
    Square,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Circle, Shape::Hexagon, Shape::Square];

    pub fn kind(self) -> ProfileKind {
        match self {
            Shape::Circle => ProfileKind::Circle,
            Shape::Hexagon => ProfileKind::RegularPolygon { sides: 6 },
            Shape::Square => ProfileKind::RegularPolygon { sides: 4 },
        }
    }

    pub fn profile<T: Real>(self, inner_diameter: T) -> Result<ConvexProfile<T>> {
        ConvexProfile::from_inner_diameter(self.kind(), inner_diameter)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Circle => "circle",
            Shape::Hexagon => "hexagon",
            Shape::Square => "square",
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "circle" | "cylinder" => Ok(Shape::Circle),
            "hexagon" => Ok(Shape::Hexagon),
            "square" | "cuboid" => Ok(Shape::Square),
            other => Err(format!("unknown shape '{other}' (expected circle, hexagon or square)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct ProcedureConfig<T> {
    pub sample_rate: T,
    /// Pulling finger speed, deg/s.
    pub finger_speed: T,
    /// First pull, deg; the second pull is twice this.
    pub pull_angle: T,
    /// Pause before each move, s.
    pub dwell: T,
    /// Half-range of the random initial object offset along the sensing finger, mm.
    pub initial_offset_range: T,
    /// Pushing finger torque, N*m.
    pub push_torque: T,
    pub object_inner_diameter: T,
    /// Smallest pushing-finger contact distance accepted for the force model, mm.
    pub min_moment_arm: T,
}

impl<T: Real> Default for ProcedureConfig<T> {
    fn default() -> Self {
        Self {
            sample_rate: T::lit(45.0),
            finger_speed: T::lit(5.4),
            pull_angle: T::lit(44.0),
            dwell: T::lit(0.25),
            initial_offset_range: T::lit(10.0),
            push_torque: T::lit(0.85),
            object_inner_diameter: T::lit(30.0),
            min_moment_arm: T::lit(5.0),
        }
    }
}

impl<T: Real> ProcedureConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sample_rate > T::zero()
            && self.finger_speed > T::zero()
            && self.pull_angle > T::zero()
            && self.pull_angle < T::lit(85.0)
            && self.dwell >= T::zero()
            && self.initial_offset_range >= T::zero()
            && self.push_torque > T::zero()
            && self.object_inner_diameter > T::zero()
            && self.min_moment_arm > T::zero();
        if !ok {
            return Err(Error::InvalidConfig(format!("invalid procedure settings: {self:?}")));
        }
        let per_tick = self.finger_speed.to_radians() / self.sample_rate;
        if per_tick > T::lit(crate::geometry::MAX_STEP_RAD) {
            return Err(Error::InvalidConfig(format!(
                "finger speed {} deg/s exceeds {:.3} deg per sample",
                self.finger_speed,
                crate::geometry::MAX_STEP_RAD.to_degrees()
            )));
        }
        Ok(())
    }

    fn ticks(&self, seconds: T) -> usize {
        (seconds * self.sample_rate).round().to_usize().unwrap_or(0)
    }
}

/// Every tunable of the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct SimulationConfig<T> {
    pub hand: HandGeometry<T>,
    pub controller: ControllerConfig<T>,
    pub sensor: SensorConfig<T>,
    pub procedure: ProcedureConfig<T>,
}

impl<T: Real> Default for SimulationConfig<T> {
    fn default() -> Self {
        Self {
            hand: HandGeometry::default(),
            controller: ControllerConfig::default(),
            sensor: SensorConfig::default(),
            procedure: ProcedureConfig::default(),
        }
    }
}

impl<T: Real> SimulationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.hand.validate()?;
        self.controller.validate()?;
        self.sensor.validate(self.hand.finger_start(), self.hand.finger_end())?;
        self.procedure.validate()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum PalmMode<T> {
    Dynamic,
    Fixed { width: T },
}

/// Per-run randomised conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig<T> {
    pub shape: Shape,
    /// Offset of the initial sensing contact from the array midpoint, mm.
    pub initial_offset: T,
    pub initial_orientation: T,
    pub palm_mode: PalmMode<T>,
    /// Seeds the initial pose draw and the sensor noise.
    pub seed: u64,
}

impl<T: Real> RunConfig<T> {
    /// Draws the initial pose from `seed`; the same generator then feeds sensor noise.
    pub fn sample(shape: Shape, seed: u64, procedure: &ProcedureConfig<T>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let range = procedure.initial_offset_range.as_f64();
        let offset = if range > 0.0 { rng.random_range(-range..=range) } else { 0.0 };
        let orientation = rng.random_range(0.0..std::f64::consts::TAU);
        Self {
            shape,
            initial_offset: T::lit(offset),
            initial_orientation: T::lit(orientation),
            palm_mode: PalmMode::Dynamic,
            seed,
        }
    }

    fn noise_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        // skip the two pose draws
        let _: f64 = rng.random();
        let _: f64 = rng.random();
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub schema_version: u32,
    pub label: Shape,
    pub seed: u64,
    pub config_hash: String,
}

/// One logged sample; angles are in the controller frame, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample<T> {
    pub timestamp: T,
    pub pressures: Vec<T>,
    pub theta_pull: T,
    pub theta_push: T,
    pub palm_width: T,
    pub pull_role: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorTrace<T> {
    pub meta: TraceMeta,
    pub samples: Vec<TraceSample<T>>,
}

impl<T: Real> SensorTrace<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn channel_count(&self) -> usize {
        self.samples.first().map_or(0, |s| s.pressures.len())
    }

    pub fn duration(&self) -> T {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.timestamp - a.timestamp,
            _ => T::zero(),
        }
    }

    pub fn channel(&self, k: usize) -> Vec<T> {
        self.samples.iter().map(|s| s.pressures[k]).collect()
    }

    pub fn timestamps(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.timestamp).collect()
    }

    pub fn frames(&self) -> Vec<SensorFrame<T>> {
        self.samples
            .iter()
            .map(|s| SensorFrame {
                timestamp: s.timestamp,
                pressures: s.pressures.clone(),
            })
            .collect()
    }

    pub fn gripper_states(&self, l_mid: T) -> Vec<GripperState<T>> {
        self.samples
            .iter()
            .map(|s| GripperState::new(s.palm_width, s.theta_pull, s.theta_push, l_mid, s.pull_role))
            .collect()
    }

    pub fn palm_widths(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.palm_width).collect()
    }
}

/// A completed run with its kinematic history.
#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub trace: SensorTrace<T>,
    /// Grasp state at every logged sample.
    pub states: Vec<GraspState<T>>,
    /// Samples where the palm command hit the travel limits.
    pub saturated_ticks: usize,
}

/// A run that lost its grasp, with everything logged up to the failure.
#[derive(Debug)]
pub struct RunAborted<T> {
    pub source: Error,
    pub partial: RunOutput<T>,
}

impl<T: Real> std::fmt::Display for RunAborted<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} run (seed {}) aborted after {} samples: {}",
            self.partial.trace.meta.label,
            self.partial.trace.meta.seed,
            self.partial.trace.len(),
            self.source
        )
    }
}

impl<T: Real> std::error::Error for RunAborted<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Validated configuration plus the calibrated sensor array.
#[derive(Debug, Clone)]
pub struct Simulator<T> {
    pub config: SimulationConfig<T>,
    pub array: SensorArray<T>,
    pub config_hash: String,
}

enum Move<T> {
    Dwell(usize),
    /// Pull to a controller-frame angle; `relative` adds the start angle.
    Pull { target: T, relative: bool },
    Swap,
}

impl<T: Real> Simulator<T> {
    pub fn new(config: SimulationConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            array: SensorArray::new(&config.sensor)?,
            config_hash: config.fingerprint(),
            config,
        })
    }

    /// Same configuration with the ideal (spread-free) sensor array.
    pub fn with_ideal_sensors(config: SimulationConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            array: SensorArray::ideal(&config.sensor),
            config_hash: config.fingerprint(),
            config,
        })
    }

    pub fn profile(&self, shape: Shape) -> Result<ConvexProfile<T>> {
        shape.profile(self.config.procedure.object_inner_diameter)
    }

    fn schedule(&self) -> Vec<Move<T>> {
        let p = &self.config.procedure;
        let dwell = p.ticks(p.dwell);
        let pull = p.pull_angle.to_radians();
        vec![
            Move::Dwell(dwell),
            Move::Pull {
                target: pull,
                relative: true,
            },
            Move::Swap,
            Move::Dwell(dwell),
            Move::Pull {
                target: pull + pull,
                relative: true,
            },
            Move::Swap,
            Move::Dwell(dwell),
            Move::Pull {
                target: T::FRAC_PI_2(),
                relative: false,
            },
        ]
    }

    /// Runs the full scripted procedure.
    pub fn run(&self, run: &RunConfig<T>) -> std::result::Result<RunOutput<T>, RunAborted<T>> {
        let moves = self.schedule();
        self.execute(run, &moves, true)
    }

    fn initial_grasp(&self, run: &RunConfig<T>, profile: &ConvexProfile<T>) -> Result<GraspState<T>> {
        let hand = &self.config.hand;
        let width = match run.palm_mode {
            PalmMode::Dynamic => None,
            PalmMode::Fixed { width } => Some(width),
        };
        grasp(
            profile,
            hand,
            run.initial_orientation,
            self.config.sensor.array_center + run.initial_offset,
            width,
            hand.sensing_side.other(),
        )
    }

    fn execute(
        &self,
        run: &RunConfig<T>,
        moves: &[Move<T>],
        sense: bool,
    ) -> std::result::Result<RunOutput<T>, RunAborted<T>> {
        let meta = TraceMeta {
            schema_version: TRACE_SCHEMA_VERSION,
            label: run.shape,
            seed: run.seed,
            config_hash: self.config_hash.clone(),
        };
        let mut out = RunOutput {
            trace: SensorTrace {
                meta,
                samples: Vec::new(),
            },
            states: Vec::new(),
            saturated_ticks: 0,
        };
        match self.execute_into(run, moves, sense, &mut out) {
            Ok(()) => Ok(out),
            Err(source) => Err(RunAborted { source, partial: out }),
        }
    }

    fn execute_into(
        &self,
        run: &RunConfig<T>,
        moves: &[Move<T>],
        sense: bool,
        out: &mut RunOutput<T>,
    ) -> Result<()> {
        let cfg = &self.config;
        let hand = &cfg.hand;
        let profile = self.profile(run.shape)?;
        let mut rng = run.noise_rng();
        let mut state = self.initial_grasp(run, &profile)?;
        let per_tick = cfg.procedure.finger_speed.to_radians() / cfg.procedure.sample_rate;
        let mut tick = 0usize;
        let mut controller = PalmController::new(cfg.controller, hand.palm_min, hand.palm_max);
        self.log(&profile, &state, tick, sense, &mut rng, out)?;

        for mv in moves {
            let (ticks, delta) = match *mv {
                Move::Swap => {
                    state = state.with_roles_swapped();
                    continue;
                }
                Move::Dwell(n) => (n, T::zero()),
                Move::Pull { target, relative } => {
                    let start = state.controller_angle(state.pull_angle());
                    let goal = if relative { start + target } else { target };
                    let span = goal - start;
                    let n = (span.abs() / per_tick).ceil().to_usize().unwrap_or(0);
                    if n == 0 {
                        continue;
                    }
                    (n, span / T::from_usize_lossy(n))
                }
            };
            for _ in 0..ticks {
                let width = match run.palm_mode {
                    PalmMode::Fixed { .. } => state.palm_width,
                    PalmMode::Dynamic => {
                        let gs = GripperState::from_grasp(&state, cfg.controller.l_mid);
                        let cmd = controller.tick(&gs)?;
                        if cmd.saturated {
                            out.saturated_ticks += 1;
                        }
                        cmd.command
                    }
                };
                state = roll_step(&profile, hand, &state, state.world_delta(delta), width)?;
                tick += 1;
                self.log(&profile, &state, tick, sense, &mut rng, out)?;
            }
        }
        Ok(())
    }

    fn log(
        &self,
        profile: &ConvexProfile<T>,
        state: &GraspState<T>,
        tick: usize,
        sense: bool,
        rng: &mut ChaCha8Rng,
        out: &mut RunOutput<T>,
    ) -> Result<()> {
        let cfg = &self.config;
        let pressures = if sense {
            let side = cfg.hand.sensing_side;
            let force = contact_force(
                cfg.procedure.push_torque,
                state.push_contact_distance(),
                cfg.procedure.min_moment_arm,
            )?;
            let line = cfg.hand.finger_line(side, state.angle(side), state.palm_width);
            let load = contact_load(
                profile,
                &state.contact.pose,
                &line,
                force,
                cfg.sensor.indentation,
                cfg.sensor.load_resolution,
            );
            self.array.read(&load, rng)
        } else {
            Vec::new()
        };
        out.trace.samples.push(TraceSample {
            timestamp: T::from_usize_lossy(tick) / cfg.procedure.sample_rate,
            pressures,
            theta_pull: state.controller_angle(state.pull_angle()),
            theta_push: state.controller_angle(state.push_angle()),
            palm_width: state.palm_width,
            pull_role: state.pull_side,
        });
        out.states.push(*state);
        Ok(())
    }

    /// Single outward pull of a cylinder with the dynamic palm and with a fixed palm.
    pub fn fig2_experiment(&self, inner_diameter: T, fixed_width: T) -> Result<Fig2Report<T>> {
        let mut sim = self.clone();
        sim.config.procedure.object_inner_diameter = inner_diameter;
        let moves = [Move::Pull {
            target: self.config.procedure.pull_angle.to_radians(),
            relative: true,
        }];
        let sensing = self.config.hand.sensing_side;
        let measure = |mode: PalmMode<T>| -> Result<(T, T, T)> {
            let run = RunConfig {
                shape: Shape::Circle,
                initial_offset: T::zero(),
                initial_orientation: T::zero(),
                palm_mode: mode,
                seed: 0,
            };
            let out = sim.execute(&run, &moves, false).map_err(|a| a.source)?;
            let profile = sim.profile(Shape::Circle)?;
            let first = out.states.first().expect("initial state logged");
            let last = out.states.last().expect("initial state logged");
            let contacts: Vec<&RollingContact<T>> = out.states.iter().map(|s| s.contact_on(sensing)).collect();
            let arc = contact_arc_length(&profile, contacts);
            let max_err = out
                .trace
                .samples
                .iter()
                .map(|s| (s.theta_pull - s.theta_push).abs())
                .fold(T::zero(), T::max);
            Ok(((last.contact.pose.angle - first.contact.pose.angle).abs(), arc, max_err))
        };
        let (rot_d, arc_d, err_d) = measure(PalmMode::Dynamic)?;
        let (rot_f, arc_f, _) = measure(PalmMode::Fixed { width: fixed_width })?;
        let hundred = T::lit(100.0);
        Ok(Fig2Report {
            rotation_dynamic_deg: rot_d.to_degrees(),
            rotation_fixed_deg: rot_f.to_degrees(),
            arc_dynamic_mm: arc_d,
            arc_fixed_mm: arc_f,
            rotation_increase_pct: (rot_d / rot_f - T::one()) * hundred,
            arc_increase_pct: (arc_d / arc_f - T::one()) * hundred,
            max_parallel_error_deg: err_d.to_degrees(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig2Report<T> {
    pub rotation_dynamic_deg: T,
    pub rotation_fixed_deg: T,
    pub arc_dynamic_mm: T,
    pub arc_fixed_mm: T,
    pub rotation_increase_pct: T,
    pub arc_increase_pct: T,
    /// Largest finger parallelism error during the dynamic pull.
    pub max_parallel_error_deg: T,
}

/// Per-run seeds for a dataset, drawn in shape-major order from one stream.
pub fn dataset_runs<T: Real>(
    shapes: &[Shape],
    runs_per_shape: usize,
    seed: u64,
    procedure: &ProcedureConfig<T>,
) -> Vec<RunConfig<T>> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut runs = Vec::with_capacity(shapes.len() * runs_per_shape);
    for &shape in shapes {
        for _ in 0..runs_per_shape {
            let s: u64 = master.random();
            runs.push(RunConfig::sample(shape, s, procedure));
        }
    }
    runs
}

/// Runs a batch in parallel; results keep the input order.
pub fn run_batch<T: Real>(
    sim: &Simulator<T>,
    runs: &[RunConfig<T>],
) -> Vec<std::result::Result<RunOutput<T>, RunAborted<T>>> {
    use rayon::prelude::*;
    runs.par_iter().map(|r| sim.run(r)).collect()
}

/// A run that was discarded because the object left the fingers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRun {
    pub shape: Shape,
    pub seed: u64,
    pub initial_offset: f64,
    pub initial_orientation: f64,
    pub reason: String,
}

/// Accepted runs in shape-major order, plus every discarded attempt.
#[derive(Debug, Clone)]
pub struct SimulatedDataset<T> {
    pub runs: Vec<(RunConfig<T>, RunOutput<T>)>,
    pub rejected: Vec<RejectedRun>,
}

/// Seed for the next placement attempt of a slot after `seed` lost its grasp.
pub fn retry_seed(seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng.random()
}

/// Simulates a whole dataset. A run whose object drops out of the grasp is
/// re-placed with a fresh seed (see [`retry_seed`]), up to `max_attempts`
/// placements per slot; any other failure aborts the dataset.
pub fn simulate_dataset<T: Real>(
    sim: &Simulator<T>,
    shapes: &[Shape],
    runs_per_shape: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<SimulatedDataset<T>> {
    use rayon::prelude::*;
    let slots = dataset_runs(shapes, runs_per_shape, seed, &sim.config.procedure);
    let results: Vec<Result<_>> = slots
        .par_iter()
        .map(|first| {
            let mut run = first.clone();
            let mut rejected = Vec::new();
            for _ in 0..max_attempts.max(1) {
                match sim.run(&run) {
                    Ok(out) => return Ok(((run, out), rejected)),
                    Err(e) if matches!(e.source, Error::GraspLost(_)) => {
                        rejected.push(RejectedRun {
                            shape: run.shape,
                            seed: run.seed,
                            initial_offset: run.initial_offset.as_f64(),
                            initial_orientation: run.initial_orientation.as_f64(),
                            reason: e.source.to_string(),
                        });
                        run = RunConfig::sample(run.shape, retry_seed(run.seed), &sim.config.procedure);
                    }
                    Err(e) => return Err(e.source),
                }
            }
            Err(Error::GraspLost(format!(
                "{} run with initial seed {} failed {} placements",
                first.shape,
                first.seed,
                rejected.len()
            )))
        })
        .collect();
    let mut data = SimulatedDataset {
        runs: Vec::with_capacity(slots.len()),
        rejected: Vec::new(),
    };
    for r in results {
        let (run, rej) = r?;
        data.runs.push(run);
        data.rejected.extend(rej);
    }
    Ok(data)
}
