//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so every line is printed; exits non-zero if any check fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rollsense::classify::{compare_methods, cross_validate, permutation_baseline, Method, Pca, TrainedModel};
use rollsense::features::{detect_peaks, extract_all, skewness, FeatureConfig, Peak};
use rollsense::geometry::{grasp, roll_step, GraspState, HandGeometry, Side};
use rollsense::io::{self, Config};
use rollsense::palm_control::{
    error_ratio, estimate_object_position, first_oscillation, first_oscillation_near_perpendicular,
    palm_correction, GripperState,
};
use rollsense::procedure::{simulate_dataset, SimulatedDataset};
use rollsense::{Shape, Simulator};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn default_dataset(config: &Config) -> SimulatedDataset<f64> {
    let sim = Simulator::new(config.simulation()).expect("default config is valid");
    let d = &config.dataset;
    simulate_dataset(&sim, &d.objects, d.runs_per_object, d.seed, d.max_attempts).expect("dataset simulates")
}

fn fig2() -> Outcome {
    let start = Instant::now();
    let sim = Simulator::with_ideal_sensors(Config::default().simulation()).unwrap();
    let r = sim.fig2_experiment(30.0, 68.5).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let within = |v: f64, target: f64, tol: f64| (v - target).abs() <= tol;
    let pass = within(r.rotation_dynamic_deg, 86.6, 5.0)
        && within(r.rotation_fixed_deg, 36.4, 5.0)
        && r.arc_increase_pct >= 55.0
        && within(r.arc_dynamic_mm, 34.2, 0.15 * 34.2)
        && within(r.arc_fixed_mm, 21.0, 0.15 * 21.0)
        && secs < 5.0;
    check(
        pass,
        format!(
            "rotation dynamic {:.2} deg (86.6 +-5), fixed {:.2} deg (36.4 +-5); arcs {:.2} / {:.2} mm \
             (34.2 / 21.0 +-15%); arc increase {:.1}% (>= 55); {:.3} s",
            r.rotation_dynamic_deg, r.rotation_fixed_deg, r.arc_dynamic_mm, r.arc_fixed_mm, r.arc_increase_pct, secs
        ),
    )
}

fn parallelism(data: &SimulatedDataset<f64>) -> Outcome {
    let one_deg = 1f64.to_radians();
    let (mut good, mut total) = (0usize, 0usize);
    let mut banded_bad = 0;
    let mut unscoped = 0;
    for (_, out) in &data.runs {
        let s = &out.trace.samples;
        total += s.len();
        good += s.iter().filter(|x| (x.theta_pull - x.theta_push).abs() < one_deg).count();
        let widths = out.trace.palm_widths();
        let pulls: Vec<f64> = s.iter().map(|x| x.theta_pull).collect();
        if first_oscillation_near_perpendicular(&widths, &pulls, 20f64.to_radians(), 10, 0.1).is_some() {
            banded_bad += 1;
        }
        if first_oscillation(&widths, 10, 0.1).is_some() {
            unscoped += 1;
        }
    }
    let frac = good as f64 / total as f64;
    let runs = data.runs.len();
    check(
        frac >= 0.95 && banded_bad == 0,
        format!(
            "{:.2}% of {total} frames within 1 deg (>= 95%); {}/{runs} runs oscillation-free within 20 deg of \
             perpendicular (100%); info: {unscoped} runs flagged over the whole trace",
            100.0 * frac,
            runs - banded_bad
        ),
    )
}

fn correction_identity() -> Outcome {
    let (l_mid, guard, d_theta) = (85.0, 0.05, 0.013);
    let mut worst = 0f64;
    for i in 0..100 {
        let th = 0.1 + (PI - 0.2) * i as f64 / 99.0;
        for j in 0..100 {
            let w = 50.0 + 100.0 * j as f64 / 99.0;
            let state = GripperState::new(w, th, th + d_theta, l_mid, Side::Right);
            let direct = palm_correction(&state, guard).unwrap();
            let pos = estimate_object_position(w, th, l_mid);
            let composed = error_ratio(pos.l, th, guard).unwrap() * d_theta;
            let rel = (direct - composed).abs() / direct.abs().max(composed.abs());
            worst = worst.max(rel);
        }
    }
    check(worst < 1e-12, format!("worst relative difference {worst:.3e} over 100x100 grid (< 1e-12)"))
}

/// Largest |travel along finger - handedness * boundary arc| between two states.
fn slip(hand: &HandGeometry<f64>, a: &GraspState<f64>, b: &GraspState<f64>) -> f64 {
    [Side::Left, Side::Right]
        .into_iter()
        .map(|side| {
            let chi = hand.finger_line(side, b.angle(side), b.palm_width).handedness();
            let (ca, cb) = (a.contact_on(side), b.contact_on(side));
            ((cb.finger_coord - ca.finger_coord) - chi * (cb.sigma - ca.sigma)).abs()
        })
        .fold(0.0, f64::max)
}

fn rolling_conservation() -> Outcome {
    let hand = HandGeometry::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut steps, mut worst, mut episodes, mut per_shape) = (0usize, 0f64, 0usize, [0usize; 3]);
    while steps < 10_000 {
        let shape = Shape::ALL[episodes % 3];
        episodes += 1;
        let profile = shape.profile(30.0).unwrap();
        let side = if rng.random::<bool>() { Side::Left } else { Side::Right };
        let Ok(mut g) = grasp(&profile, &hand, rng.random_range(0.0..2.0 * PI), rng.random_range(70.0..100.0), None, side)
        else {
            continue;
        };
        for _ in 0..400 {
            let delta = rng.random_range(-0.01..=0.01);
            let width = g.palm_width + rng.random_range(-0.3..=0.3);
            let Ok(next) = roll_step(&profile, &hand, &g, delta, width) else {
                break;
            };
            worst = worst.max(slip(&hand, &g, &next));
            g = next;
            steps += 1;
            per_shape[shape.index()] += 1;
        }
    }
    check(
        worst < 1e-6,
        format!(
            "worst per-step slip {worst:.3e} mm over {steps} steps (circle {}, hexagon {}, square {}) (< 1e-6)",
            per_shape[0], per_shape[1], per_shape[2]
        ),
    )
}

/// Exhaustive scan: every maximal run of samples at or above `t` that holds a
/// sample strictly above `t` is a peak, opening at that first strict sample.
fn oracle_peaks(x: &[f64], t: f64) -> Vec<(usize, usize, usize, f64)> {
    let n = x.len();
    let mut out = Vec::new();
    for a in 0..n {
        let opens_run = x[a] >= t && (a == 0 || x[a - 1] < t);
        if !opens_run {
            continue;
        }
        let mut b = a;
        while b + 1 < n && x[b + 1] >= t {
            b += 1;
        }
        let Some(start) = (a..=b).find(|&i| x[i] > t) else {
            continue;
        };
        let end = if b + 1 < n { b + 1 } else { n - 1 };
        if end == start {
            continue;
        }
        let mut ttp = start;
        for i in start..=b {
            if x[i] > x[ttp] {
                ttp = i;
            }
        }
        out.push((start, end, ttp, x[ttp]));
    }
    out
}

fn as_tuples(p: &[Peak<f64>]) -> Vec<(usize, usize, usize, f64)> {
    p.iter().map(|p| (p.span.start, p.span.end, p.span.ttp, p.amplitude)).collect()
}

fn feature_oracle() -> Outcome {
    let cfg = FeatureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    for k in 0..1000 {
        let n = rng.random_range(20..200);
        // values on a 0.05 grid so samples land exactly on the threshold often
        let scale = if k % 2 == 0 { 0.05 } else { 0.01 };
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..=20) as f64 * scale).collect();
        let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let t = 0.05f64.max(0.2 * max);
        if as_tuples(&detect_peaks(&x, &cfg)) != oracle_peaks(&x, t) {
            mismatches += 1;
        }
    }

    let symmetric = skewness(18.0, 22.0, 20.0).unwrap();

    // 0 -> 0.5 -> 0 over [10 s, 12 s] sampled at 45 Hz
    let rate = 45.0;
    let times: Vec<f64> = (0..(15.0 * rate) as usize).map(|i| i as f64 / rate).collect();
    let tri: Vec<f64> = times.iter().map(|&t| (0.5 - 0.5 * (t - 11.0).abs()).max(0.0)).collect();
    let peaks = detect_peaks(&tri, &cfg);
    // analytic crossings of the threshold 0.2 * 0.5 with the two ramps
    let thr = 0.2 * 0.5;
    let (a_start, a_end) = (10.0 + thr / 0.5, 12.0 - thr / 0.5);
    let dt = 1.0 / rate;
    let tri_ok = peaks.len() == 1 && {
        let p = peaks[0];
        (times[p.span.start] - a_start).abs() <= dt + 1e-9
            && (times[p.span.end] - a_end).abs() <= dt + 1e-9
            && (times[p.span.ttp] - 11.0).abs() <= dt + 1e-9
            && (p.amplitude - 0.5).abs() < 1e-12
    };
    let tri_detail = peaks.first().map_or("no peak".to_string(), |p| {
        format!(
            "start {:.3} end {:.3} ttp {:.3} amp {:.3} vs {a_start:.1}/{a_end:.1}/11.0/0.5",
            times[p.span.start], times[p.span.end], times[p.span.ttp], p.amplitude
        )
    });
    check(
        mismatches == 0 && symmetric == 0.0 && tri_ok,
        format!("{mismatches}/1000 series differ from scan oracle; symmetric skew {symmetric}; triangle {tri_detail}"),
    )
}

fn dataset_shape(data: &SimulatedDataset<f64>, config: &Config) -> (Outcome, rollsense::FeatureMatrix) {
    let traces: Vec<_> = data.runs.iter().map(|(_, o)| o.trace.clone()).collect();
    let m = extract_all(&traces, &config.features).unwrap();
    let frames: Vec<usize> = traces.iter().map(|t| t.len()).collect();
    let durations: Vec<f64> = traces.iter().map(|t| t.duration()).collect();
    let (fmin, fmax) = (*frames.iter().min().unwrap(), *frames.iter().max().unwrap());
    let dmin = durations.iter().cloned().fold(f64::INFINITY, f64::min);
    let dmax = durations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = m.len() == 90
        && m.width() == 80
        && fmin >= 1450
        && fmax <= 1550
        && dmin >= 32.6
        && dmax <= 33.8;
    (
        check(
            pass,
            format!(
                "{}x{} matrix (90x80); frames {fmin}..{fmax} (1500 +-50); durations {dmin:.3}..{dmax:.3} s ([32.6, 33.8]); \
                 info: {} placements re-drawn",
                m.len(),
                m.width(),
                data.rejected.len()
            ),
        ),
        m,
    )
}

fn classification(config: &Config, sim_secs: f64, m: &rollsense::FeatureMatrix) -> Outcome {
    let start = Instant::now();
    let rows = m.to_f64_rows();
    let labels = m.class_indices();
    let cfg = &config.classifier;
    let seed = config.dataset.seed;
    let results = compare_methods(&rows, &labels, cfg, seed).unwrap();
    let acc = |name: &str| results.iter().find(|(m, _)| m.name() == name).unwrap().1.accuracy();
    let subspace = acc(Method::SubspaceKnn(cfg.ensemble).name());
    let knn = acc(Method::Knn { k: cfg.ensemble.k }.name());
    let lda = acc(Method::Lda { ridge: cfg.lda_ridge }.name());
    let perm = permutation_baseline(&rows, &labels, Method::SubspaceKnn(cfg.ensemble), cfg, seed, cfg.permutation_repeats)
        .unwrap();
    let perm_mean = perm.iter().sum::<f64>() / perm.len() as f64;
    let secs = sim_secs + start.elapsed().as_secs_f64();
    check(
        subspace >= 0.90 && subspace >= knn && (perm_mean - 1.0 / 3.0).abs() <= 0.10 && secs < 60.0,
        format!(
            "subspace KNN {:.1}% (>= 90), plain KNN {:.1}% (<= subspace), info: LDA {:.1}%; shuffled labels {:.1}% \
             (33 +-10); {secs:.1} s end to end (< 60)",
            100.0 * subspace,
            100.0 * knn,
            100.0 * lda,
            100.0 * perm_mean
        ),
    )
}

fn sample_rows(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    // anisotropic so the spectrum is spread out
    (0..n)
        .map(|_| (0..d).map(|j| rng.random_range(-1.0..1.0) * (1.0 + j as f64)).collect())
        .collect()
}

/// Covariance spectrum from the singular values of the centred data.
fn oracle_spectrum(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let d = rows[0].len();
    let mut x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    for j in 0..d {
        let mean = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let mut s: Vec<f64> = x.singular_values().iter().map(|v| v * v / (n as f64 - 1.0)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

fn pca_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut minimal_ok, mut worst_rel) = (true, 0f64);
    for trial in 0..20 {
        let rows = sample_rows(40 + trial, 12, &mut rng);
        let pca = Pca::fit(&rows, 0.95).unwrap();
        let spec = oracle_spectrum(&rows);
        let total: f64 = spec.iter().sum();
        let mut acc = 0.0;
        let mut m = spec.len();
        for (i, v) in spec.iter().enumerate() {
            acc += v;
            if acc / total >= 0.95 {
                m = i + 1;
                break;
            }
        }
        minimal_ok &= pca.retained() == m;
        let discarded: f64 = spec[pca.retained()..].iter().sum();
        let err = pca.reconstruction_error(&rows);
        worst_rel = worst_rel.max((err - discarded).abs() / discarded);
    }
    let u: Vec<f64> = (0..10).map(|j| (j as f64 * 0.7).sin()).collect();
    let v: Vec<f64> = (0..10).map(|j| (j as f64 * 1.3).cos()).collect();
    let rank2: Vec<Vec<f64>> = (0..50)
        .map(|_| {
            let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            (0..10).map(|j| 1.0 + a * u[j] + b * v[j]).collect()
        })
        .collect();
    let m2 = Pca::fit(&rank2, 0.95).unwrap().retained();
    check(
        minimal_ok && worst_rel < 1e-9 && m2 == 2,
        format!(
            "minimal component count {} on 20 random sets; reconstruction identity worst {worst_rel:.2e} (< 1e-9); \
             rank-2 data keeps {m2} (2)",
            if minimal_ok { "matched" } else { "MISMATCHED" }
        ),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn determinism(config: &Config, first: &SimulatedDataset<f64>, m: &rollsense::FeatureMatrix) -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    io::write_dataset(&a, config, first).unwrap();
    io::write_dataset(&b, config, &default_dataset(config)).unwrap();
    let same_data = dir_bytes(&a) == dir_bytes(&b);

    let rows = m.to_f64_rows();
    let labels = m.class_indices();
    let cfg = &config.classifier;
    let method = Method::SubspaceKnn(cfg.ensemble);
    let model = || io::to_json(&TrainedModel::fit(&rows, &labels, m.names.clone(), method, cfg.variance_target, 0).unwrap());
    let same_model = model() == model();
    let report = || io::to_json(&cross_validate(&rows, &labels, method, cfg, 0).unwrap());
    let same_report = report() == report();
    check(
        same_data && same_model && same_report,
        format!("dataset bytes identical: {same_data}; model bytes identical: {same_model}; report bytes identical: {same_report}"),
    )
}

fn main() {
    let config = Config::default();
    let t0 = Instant::now();
    let data = default_dataset(&config);
    let sim_secs = t0.elapsed().as_secs_f64();

    let (shape_outcome, matrix) = dataset_shape(&data, &config);
    let outcomes = [
        ("1 fig2 rotation and contact arc", fig2()),
        ("2 controller parallelism and oscillation", parallelism(&data)),
        ("3 palm correction identity", correction_identity()),
        ("4 rolling conservation", rolling_conservation()),
        ("5 peak detection oracle", feature_oracle()),
        ("6 dataset shape", shape_outcome),
        ("7 classification", classification(&config, sim_secs, &matrix)),
        ("8 PCA", pca_checks()),
        ("9 determinism", determinism(&config, &data, &matrix)),
    ];
    let mut failed = 0;
    for (name, o) in &outcomes {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
