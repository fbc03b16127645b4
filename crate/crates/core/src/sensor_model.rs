//! Synthetic barometric tactile array on the sensing finger.
//!
//! Each cell integrates the normal load over a pitch-wide window around its
//! sensitive hole, blurred by the elastic cover. The blur is a split Gaussian
//! (wider toward the cell centre than toward the near wall), which is what
//! makes a load crossing the cell in opposite directions produce oppositely
//! skewed peaks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexProfile, FingerLine, Pose, ProfileKind};
use crate::scalar::Real;

/// Standard gravity used to turn calibration masses into forces.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Calibration masses in grams.
pub const CALIBRATION_MASSES_G: [f64; 3] = [7.75, 19.04, 29.70];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound = "T: Real")]
pub struct SensorConfig<T> {
    pub sensor_count: usize,
    pub pitch: T,
    /// Finger coordinate of the array midpoint, mm.
    pub array_center: T,
    /// Offset of each cell's sensitive hole from the cell centre, mm.
    pub hole_offset: T,
    /// Mean scale of the elastic blur, mm.
    pub footprint_sigma: T,
    /// Relative difference between the two blur half-widths, in `[0, 1)`.
    pub footprint_skew: T,
    /// Kernel support beyond the cell window, in blur widths.
    pub footprint_cutoff: T,
    /// Calibrated pressure per newton of load summed over all cells.
    pub gain: T,
    pub saturation: T,
    pub noise_sigma: T,
    /// Elastic indentation depth used to spread the contact load, mm.
    pub indentation: T,
    /// Sampling step of distributed loads along the finger, mm.
    pub load_resolution: T,
    /// Half-range of the multiplicative per-cell sensitivity spread.
    pub sensitivity_spread: T,
    /// Upper bound of the raw per-cell baseline.
    pub baseline_max: T,
    /// Readings averaged per calibration weight.
    pub calibration_samples: usize,
    pub hardware_seed: u64,
}

impl<T: Real> Default for SensorConfig<T> {
    fn default() -> Self {
        Self {
            sensor_count: 10,
            pitch: T::lit(8.0),
            array_center: T::lit(85.0),
            hole_offset: T::lit(1.5),
            footprint_sigma: T::lit(2.0),
            footprint_skew: T::lit(0.4),
            footprint_cutoff: T::lit(4.0),
            gain: T::lit(0.06),
            saturation: T::one(),
            noise_sigma: T::lit(0.01),
            indentation: T::lit(0.5),
            load_resolution: T::lit(0.05),
            sensitivity_spread: T::lit(0.15),
            baseline_max: T::lit(0.1),
            calibration_samples: 450,
            hardware_seed: 7,
        }
    }
}

impl<T: Real> SensorConfig<T> {
    pub fn validate(&self, finger_start: T, finger_end: T) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("sensor: {m}")));
        if self.sensor_count == 0 {
            return bad("need at least one sensor");
        }
        if !(self.pitch > T::zero()) {
            return bad("pitch must be positive");
        }
        if !(self.hole_offset.abs() < self.pitch * T::half()) {
            return bad("hole offset must be smaller than half the pitch");
        }
        if !(self.footprint_sigma > T::zero())
            || !(self.footprint_skew >= T::zero() && self.footprint_skew < T::one())
            || !(self.footprint_cutoff > T::zero())
        {
            return bad("footprint kernel parameters out of range");
        }
        if !(self.gain > T::zero() && self.saturation > T::zero()) || self.noise_sigma < T::zero() {
            return bad("gain and saturation must be positive, noise non-negative");
        }
        if !(self.indentation > T::zero() && self.load_resolution > T::zero()) {
            return bad("indentation and load resolution must be positive");
        }
        if !(self.sensitivity_spread >= T::zero() && self.sensitivity_spread < T::one())
            || self.baseline_max < T::zero()
            || self.calibration_samples == 0
        {
            return bad("hardware spread parameters out of range");
        }
        let layout = SensorLayout::new(self);
        let first = layout.positions[0];
        let last = layout.positions[layout.positions.len() - 1];
        if first < finger_start || last > finger_end {
            return bad("array does not fit on the finger");
        }
        Ok(())
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Cell response to a unit point load as a function of `u = x - hole`.
#[derive(Debug, Clone, PartialEq)]
pub struct FootprintKernel<T> {
    pitch: f64,
    /// Blur half-width on the cell-centre side (negative `u` for a positive hole offset).
    sigma_inner: f64,
    sigma_outer: f64,
    /// Sign of the hole offset; mirrors the kernel for negative offsets.
    orientation: f64,
    u_min: T,
    u_max: T,
    du: T,
    table: Vec<T>,
}

const KERNEL_STEP: f64 = 0.005;

impl<T: Real> FootprintKernel<T> {
    pub fn new(config: &SensorConfig<T>) -> Self {
        let sigma = config.footprint_sigma.as_f64();
        let skew = config.footprint_skew.as_f64();
        let pitch = config.pitch.as_f64();
        let orientation = if config.hole_offset < T::zero() { -1.0 } else { 1.0 };
        let mut k = Self {
            pitch,
            sigma_inner: sigma * (1.0 + skew),
            sigma_outer: sigma * (1.0 - skew),
            orientation,
            u_min: T::zero(),
            u_max: T::zero(),
            du: T::lit(KERNEL_STEP),
            table: Vec::new(),
        };
        let cutoff = config.footprint_cutoff.as_f64();
        let (lo, hi) = (
            -(pitch / 2.0 + cutoff * k.sigma_inner),
            pitch / 2.0 + cutoff * k.sigma_outer,
        );
        let (lo, hi) = if orientation > 0.0 { (lo, hi) } else { (-hi, -lo) };
        let n = ((hi - lo) / KERNEL_STEP).ceil() as usize + 1;
        k.table = (0..n)
            .map(|i| T::lit(k.exact(lo + i as f64 * KERNEL_STEP)))
            .collect();
        k.u_min = T::lit(lo);
        k.u_max = T::lit(lo + (n - 1) as f64 * KERNEL_STEP);
        k
    }

    fn split_cdf(&self, v: f64) -> f64 {
        let (sl, sr) = (self.sigma_inner, self.sigma_outer);
        let c = sl + sr;
        if v < 0.0 {
            2.0 * sl / c * normal_cdf(v / sl)
        } else {
            sl / c + 2.0 * sr / c * (normal_cdf(v / sr) - 0.5)
        }
    }

    /// Untruncated closed form.
    pub fn exact(&self, u: f64) -> f64 {
        let u = u * self.orientation;
        self.split_cdf(u + self.pitch / 2.0) - self.split_cdf(u - self.pitch / 2.0)
    }

    /// Tabulated, truncated kernel used by the forward model.
    pub fn eval(&self, u: T) -> T {
        if u < self.u_min || u > self.u_max {
            return T::zero();
        }
        let s = (u - self.u_min) / self.du;
        let i = s.floor().to_usize().unwrap_or(0).min(self.table.len() - 2);
        let f = s - T::from_usize_lossy(i);
        self.table[i] + (self.table[i + 1] - self.table[i]) * f
    }

    pub fn support(&self) -> (T, T) {
        (self.u_min, self.u_max)
    }
}

/// Geometry of the active cells along the sensing finger.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorLayout<T> {
    /// Cell centres, mm from the finger base, strictly increasing.
    pub positions: Vec<T>,
    pub hole_offset: T,
    pub gain: T,
    pub saturation: T,
    pub kernel: FootprintKernel<T>,
}

impl<T: Real> SensorLayout<T> {
    pub fn new(config: &SensorConfig<T>) -> Self {
        let mid = T::from_usize_lossy(config.sensor_count.saturating_sub(1)) * T::half();
        Self {
            positions: (0..config.sensor_count)
                .map(|k| config.array_center + (T::from_usize_lossy(k) - mid) * config.pitch)
                .collect(),
            hole_offset: config.hole_offset,
            gain: config.gain,
            saturation: config.saturation,
            kernel: FootprintKernel::new(config),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn hole(&self, k: usize) -> T {
        self.positions[k] + self.hole_offset
    }

    /// Noise-free pressures (not clipped).
    pub fn clean_response(&self, load: &Load<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.len()];
        let (lo, hi) = self.kernel.support();
        for &(x, f) in &load.points {
            for (k, o) in out.iter_mut().enumerate() {
                let u = x - self.hole(k);
                if u >= lo && u <= hi {
                    *o += f * self.kernel.eval(u);
                }
            }
        }
        out.iter().map(|&v| v * self.gain).collect()
    }

    /// Ideal calibrated frame: clean response plus Gaussian noise, clipped to `[0, saturation]`.
    pub fn respond<R: Rng + ?Sized>(&self, load: &Load<T>, noise_sigma: T, rng: &mut R) -> Vec<T> {
        let noise = Normal::new(0.0, noise_sigma.as_f64().max(0.0)).expect("finite noise sigma");
        self.clean_response(load)
            .into_iter()
            .map(|p| {
                let v = p + T::lit(noise.sample(rng));
                v.max(T::zero()).min(self.saturation)
            })
            .collect()
    }
}

/// Normal load on the sensing finger as discrete `(position mm, force N)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Load<T> {
    pub points: Vec<(T, T)>,
}

impl<T: Real> Load<T> {
    pub fn none() -> Self {
        Self { points: Vec::new() }
    }

    pub fn point(x: T, force: T) -> Self {
        Self {
            points: vec![(x, force)],
        }
    }

    /// Force spread evenly over `[a, b]`.
    pub fn uniform(a: T, b: T, force: T, resolution: T) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let n = ((b - a) / resolution).ceil().to_usize().unwrap_or(1).max(1);
        let dx = (b - a) / T::from_usize_lossy(n);
        let f = force / T::from_usize_lossy(n);
        Self {
            points: (0..n)
                .map(|i| (a + dx * (T::from_usize_lossy(i) + T::half()), f))
                .collect(),
        }
    }

    pub fn total(&self) -> T {
        self.points.iter().map(|p| p.1).sum()
    }

    pub fn centroid(&self) -> Option<T> {
        let total = self.total();
        (total > T::zero()).then(|| self.points.iter().map(|&(x, f)| x * f).sum::<T>() / total)
    }
}

/// Load a posed object exerts on `line`, spread by elastic indentation.
///
/// The local load density is proportional to `indentation - gap(x)` where the
/// object boundary sits within `indentation` of the finger surface, and the
/// total is scaled to `force`. Faces lying flush give a uniform load, corners
/// a narrow wedge and arcs a parabolic bump.
pub fn contact_load<T: Real>(
    profile: &ConvexProfile<T>,
    pose: &Pose<T>,
    line: &FingerLine<T>,
    force: T,
    indentation: T,
    resolution: T,
) -> Load<T> {
    let to_line = |p: crate::numeric::Vec2<T>| (line.coordinate(p), line.clearance(p));
    let gap_region: Option<(T, T)>;
    let gap: Box<dyn Fn(T) -> T + '_>;
    match profile.kind {
        ProfileKind::Circle => {
            let r = profile.circumradius;
            let (tc, hc) = to_line(pose.position);
            let depth = hc - indentation;
            gap_region = (depth < r).then(|| {
                let half = (r * r - depth * depth).max(T::zero()).sqrt();
                (tc - half, tc + half)
            });
            gap = Box::new(move |x: T| hc - (r * r - (x - tc) * (x - tc)).max(T::zero()).sqrt());
        }
        ProfileKind::RegularPolygon { .. } => {
            let pts: Vec<(T, T)> = profile.vertices().into_iter().map(|v| to_line(pose.apply(v))).collect();
            let n = pts.len();
            let mut lo = T::infinity();
            let mut hi = T::neg_infinity();
            for i in 0..n {
                let (a, b) = (pts[i], pts[(i + 1) % n]);
                for (p, q) in [(a, b), (b, a)] {
                    if p.1 < indentation {
                        lo = lo.min(p.0);
                        hi = hi.max(p.0);
                        if q.1 >= indentation {
                            let s = (indentation - p.1) / (q.1 - p.1);
                            let x = p.0 + (q.0 - p.0) * s;
                            lo = lo.min(x);
                            hi = hi.max(x);
                        }
                    }
                }
            }
            gap_region = (lo <= hi).then_some((lo, hi));
            gap = Box::new(move |x: T| {
                let mut g = T::infinity();
                for i in 0..n {
                    let (a, b) = (pts[i], pts[(i + 1) % n]);
                    let (p, q) = if a.0 <= b.0 { (a, b) } else { (b, a) };
                    if x >= p.0 && x <= q.0 {
                        let h = if q.0 > p.0 {
                            p.1 + (q.1 - p.1) * (x - p.0) / (q.0 - p.0)
                        } else {
                            p.1.min(q.1)
                        };
                        g = g.min(h);
                    }
                }
                g
            });
        }
    }

    let Some((lo, hi)) = gap_region else {
        return Load::none();
    };
    let n = ((hi - lo) / resolution).ceil().to_usize().unwrap_or(1).max(1);
    let dx = (hi - lo) / T::from_usize_lossy(n);
    let mut points: Vec<(T, T)> = (0..n)
        .filter_map(|i| {
            let x = lo + dx * (T::from_usize_lossy(i) + T::half());
            let w = indentation - gap(x);
            (w > T::zero()).then_some((x, w))
        })
        .collect();
    let total: T = points.iter().map(|p| p.1).sum();
    if !(total > T::zero()) {
        // Region narrower than one sample: collapse onto its middle.
        return Load::point((lo + hi) * T::half(), force);
    }
    for p in &mut points {
        p.1 = p.1 / total * force;
    }
    Load { points }
}

/// Normal force from the pushing-finger torque and the contact moment arm.
///
/// `torque` is in N*m and `l` in mm; the result is in N.
pub fn contact_force<T: Real>(torque: T, l: T, min_arm: T) -> Result<T> {
    if !(l > min_arm) {
        return Err(Error::SingularMomentArm(l.as_f64()));
    }
    Ok(torque / (l * T::lit(1e-3)))
}

/// Linear sensor model `reading = offset + slope * force`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams<T> {
    pub slope: T,
    pub offset: T,
}

impl<T: Real> CalibrationParams<T> {
    pub fn identity() -> Self {
        Self {
            slope: T::one(),
            offset: T::zero(),
        }
    }

    pub fn force(&self, reading: T) -> T {
        (reading - self.offset) / self.slope
    }
}

/// Least-squares line through `(mass * g, reading)` pairs.
///
/// Readings must increase strictly with mass.
pub fn calibrate<T: Real>(masses_g: &[T], readings: &[T]) -> Result<CalibrationParams<T>> {
    if masses_g.len() != readings.len() || masses_g.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least two (mass, reading) pairs, got {} masses and {} readings",
            masses_g.len(),
            readings.len()
        )));
    }
    let mut pairs: Vec<(T, T)> = masses_g
        .iter()
        .zip(readings)
        .map(|(&m, &r)| (m * T::lit(STANDARD_GRAVITY * 1e-3), r))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    if pairs.windows(2).any(|w| !(w[1].0 > w[0].0) || !(w[1].1 > w[0].1)) {
        return Err(Error::DegenerateFit("readings do not increase with mass".into()));
    }
    let n = T::from_usize_lossy(pairs.len());
    let fx = pairs.iter().map(|p| p.0).sum::<T>() / n;
    let fy = pairs.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = pairs.iter().map(|p| (p.0 - fx) * (p.1 - fy)).sum();
    let sxx: T = pairs.iter().map(|p| (p.0 - fx) * (p.0 - fx)).sum();
    let slope = sxy / sxx;
    if !(slope > T::zero()) || !slope.is_finite() {
        return Err(Error::DegenerateFit(format!("non-positive slope {slope}")));
    }
    Ok(CalibrationParams {
        slope,
        offset: fy - slope * fx,
    })
}

/// Raw behaviour of one physical cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellHardware<T> {
    pub sensitivity: T,
    pub baseline: T,
}

/// A calibrated array with per-cell hardware spread.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorArray<T> {
    pub layout: SensorLayout<T>,
    pub cells: Vec<CellHardware<T>>,
    pub calibration: Vec<CalibrationParams<T>>,
    noise_sigma: T,
}

impl<T: Real> SensorArray<T> {
    /// Builds the array from its hardware seed and runs the weight calibration.
    pub fn new(config: &SensorConfig<T>) -> Result<Self> {
        let layout = SensorLayout::new(config);
        let mut rng = ChaCha8Rng::seed_from_u64(config.hardware_seed);
        let spread = config.sensitivity_spread.as_f64();
        let sens = Uniform::new_inclusive(1.0 - spread, 1.0 + spread).expect("valid spread");
        let base = Uniform::new_inclusive(0.0, config.baseline_max.as_f64().max(0.0)).expect("valid baseline");
        let cells: Vec<CellHardware<T>> = (0..layout.len())
            .map(|_| CellHardware {
                sensitivity: T::lit(sens.sample(&mut rng)),
                baseline: T::lit(base.sample(&mut rng)),
            })
            .collect();
        let mut array = Self {
            layout,
            cells,
            calibration: Vec::new(),
            noise_sigma: config.noise_sigma,
        };
        let masses: Vec<T> = CALIBRATION_MASSES_G.iter().map(|&m| T::lit(m)).collect();
        let samples = T::from_usize_lossy(config.calibration_samples);
        let mut calibration = Vec::with_capacity(array.layout.len());
        for k in 0..array.layout.len() {
            let readings: Vec<T> = masses
                .iter()
                .map(|&m| {
                    let load = Load::point(array.layout.hole(k), m * T::lit(STANDARD_GRAVITY * 1e-3));
                    let mut acc = T::zero();
                    for _ in 0..config.calibration_samples {
                        acc += array.raw(&load, &mut rng)[k];
                    }
                    acc / samples
                })
                .collect();
            calibration.push(calibrate(&masses, &readings)?);
        }
        array.calibration = calibration;
        Ok(array)
    }

    /// Array with unit sensitivity, zero baseline and exact calibration.
    pub fn ideal(config: &SensorConfig<T>) -> Self {
        let layout = SensorLayout::new(config);
        let n = layout.len();
        let at_hole = layout.kernel.eval(T::zero()) * layout.gain;
        Self {
            cells: vec![
                CellHardware {
                    sensitivity: T::one(),
                    baseline: T::zero()
                };
                n
            ],
            calibration: vec![
                CalibrationParams {
                    slope: at_hole,
                    offset: T::zero()
                };
                n
            ],
            layout,
            noise_sigma: config.noise_sigma,
        }
    }

    /// Uncalibrated readings; noise is referred to the calibrated scale.
    pub fn raw<R: Rng + ?Sized>(&self, load: &Load<T>, rng: &mut R) -> Vec<T> {
        let noise = Normal::new(0.0, self.noise_sigma.as_f64().max(0.0)).expect("finite noise sigma");
        self.layout
            .clean_response(load)
            .into_iter()
            .zip(&self.cells)
            .map(|(p, c)| c.baseline + c.sensitivity * (p + T::lit(noise.sample(rng))))
            .collect()
    }

    /// Converts raw readings to clipped calibrated pressures.
    pub fn calibrated(&self, raw: &[T]) -> Vec<T> {
        let at_hole = self.layout.kernel.eval(T::zero()) * self.layout.gain;
        raw.iter()
            .zip(&self.calibration)
            .map(|(&r, c)| (c.force(r) * at_hole).max(T::zero()).min(self.layout.saturation))
            .collect()
    }

    pub fn read<R: Rng + ?Sized>(&self, load: &Load<T>, rng: &mut R) -> Vec<T> {
        let raw = self.raw(load, rng);
        self.calibrated(&raw)
    }
}

/// One timestamped calibrated array reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame<T> {
    pub timestamp: T,
    pub pressures: Vec<T>,
}
