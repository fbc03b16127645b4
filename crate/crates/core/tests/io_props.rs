use std::fs;
use std::path::Path;

use proptest::prelude::*;
use rollsense::classify::{Method, TrainedModel};
use rollsense::error::Error;
use rollsense::features::{FeatureConfig, FeatureMatrix};
use rollsense::geometry::Side;
use rollsense::io::{self, Config};
use rollsense::plot;
use rollsense::procedure::{simulate_dataset, SensorTrace, TraceMeta, TraceSample, TRACE_SCHEMA_VERSION};
use rollsense::{Shape, Simulator};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e3f64..1e3]
}

fn trace_of(samples: Vec<(f64, Vec<f64>, f64, f64, f64, bool)>) -> SensorTrace<f64> {
    SensorTrace {
        meta: TraceMeta {
            schema_version: TRACE_SCHEMA_VERSION,
            label: Shape::Square,
            seed: u64::MAX,
            config_hash: "00ff".into(),
        },
        samples: samples
            .into_iter()
            .map(|(t, p, a, b, w, left)| TraceSample {
                timestamp: t,
                pressures: p,
                theta_pull: a,
                theta_push: b,
                palm_width: w,
                pull_role: if left { Side::Left } else { Side::Right },
            })
            .collect(),
    }
}

proptest! {
    #[test]
    fn trace_round_trip_is_bit_exact(
        samples in prop::collection::vec((finite(), prop::collection::vec(finite(), 4), finite(), finite(), finite(), any::<bool>()), 1..30)
    ) {
        let t = trace_of(samples);
        let back: SensorTrace<f64> = io::trace_from_str(&io::trace_to_string(&t), Path::new("t.csv")).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn f32_trace_round_trip_is_bit_exact(values in prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), 3)) {
        let t = SensorTrace::<f32> {
            meta: TraceMeta { schema_version: TRACE_SCHEMA_VERSION, label: Shape::Circle, seed: 1, config_hash: String::new() },
            samples: vec![TraceSample {
                timestamp: values[0],
                pressures: values.clone(),
                theta_pull: values[1],
                theta_push: values[2],
                palm_width: 70.0,
                pull_role: Side::Left,
            }],
        };
        let back: SensorTrace<f32> = io::trace_from_str(&io::trace_to_string(&t), Path::new("t.csv")).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn feature_matrix_round_trip_is_bit_exact(rows in prop::collection::vec((0usize..3, prop::collection::vec(finite(), 6)), 1..20)) {
        let m = FeatureMatrix {
            names: (0..6).map(|i| format!("f{i}")).collect(),
            labels: rows.iter().map(|r| Shape::ALL[r.0]).collect(),
            rows: rows.into_iter().map(|r| r.1).collect(),
        };
        let back: FeatureMatrix<f64> = io::features_from_str(&io::features_to_string(&m), Path::new("f.csv")).unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn corrupted_dataset_is_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = Config::default();
    config.dataset.runs_per_object = 1;
    let sim = Simulator::new(config.simulation()).unwrap();
    let data = simulate_dataset(&sim, &Shape::ALL, 1, 3, 5).unwrap();
    let dir = tmp.path().join("ds");
    let manifest = io::write_dataset(&dir, &config, &data).unwrap();
    let (_, traces) = io::load_dataset(&dir).unwrap();
    assert_eq!(traces.len(), 3);

    let victim = dir.join(&manifest.runs[1].file);
    let original = fs::read(&victim).unwrap();
    let mut bytes = original.clone();
    let k = bytes.len() - 10;
    bytes[k] = if bytes[k] == b'1' { b'2' } else { b'1' };
    fs::write(&victim, &bytes).unwrap();
    assert!(matches!(io::load_dataset(&dir), Err(Error::HashMismatch { .. })));
    fs::write(&victim, &original).unwrap();

    let cfg_path = dir.join(io::CONFIG_FILE);
    let text = fs::read_to_string(&cfg_path).unwrap();
    fs::write(&cfg_path, text.replace("gain = 0.8", "gain = 0.7")).unwrap();
    assert!(matches!(io::load_dataset(&dir), Err(Error::HashMismatch { .. })));
}

#[test]
fn model_file_round_trip() {
    let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 3) as f64 + 0.1 * i as f64, (i * 7 % 5) as f64]).collect();
    let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("m.json");
    let model = TrainedModel::fit(&rows, &labels, vec!["a".into(), "b".into()], Method::Knn { k: 1 }, 0.95, 3).unwrap();
    io::save_model(&path, &model).unwrap();
    assert_eq!(io::load_model(&path).unwrap(), model);
    fs::write(&path, fs::read_to_string(&path).unwrap().replace("\"version\": 1", "\"version\": 2")).unwrap();
    assert!(io::load_model(&path).unwrap_err().to_string().contains("version 2"));
}

/// Starting x of every marker path filled with `marker`, in document order.
fn marker_xs(svg: &str, marker: &str) -> Vec<f64> {
    svg.lines()
        .filter(|l| l.starts_with("<path d=\"M") && l.contains(marker))
        .map(|l| {
            let rest = &l[l.find("d=\"M").unwrap() + 4..];
            rest[..rest.find(',').unwrap()].parse().unwrap()
        })
        .collect()
}

#[test]
fn peak_markers_on_triangle_land_at_analytic_times() {
    let rate = 45.0;
    let n = (15.0 * rate) as usize + 1;
    let t: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
    let tri: Vec<f64> = t.iter().map(|&s| (0.5 - 0.5 * (s - 11.0).abs()).max(0.0)).collect();
    let cfg = FeatureConfig::default();
    let svg = plot::peak_markers(&t, &tri, &cfg, "triangle").unwrap();

    // smoothing keeps the ramps and only lowers the apex; the threshold is 20% of
    // the smoothed maximum, so the crossings sit on the unchanged ramps
    let apex = (495 - 10..=495 + 9).map(|i| tri[i]).sum::<f64>() / 20.0;
    let thr = 0.2 * apex;
    let (start, end) = (10.0 + thr / 0.5, 12.0 - thr / 0.5);
    let px = |s: f64| 70.0 + s / 15.0 * 680.0;
    let sample_px = 680.0 / 15.0 / rate;
    let starts = marker_xs(&svg, "fill=\"#2ca02c\"/>");
    let ends = marker_xs(&svg, "fill=\"#d62728\"/>");
    let mids = marker_xs(&svg, "fill=\"#ff7f0e\"/>");
    assert_eq!((starts.len(), ends.len(), mids.len()), (1, 1, 1), "{svg}");
    assert!((starts[0] - px(start)).abs() <= sample_px + 0.05, "{} vs {}", starts[0], px(start));
    assert!((ends[0] - px(end)).abs() <= sample_px + 0.05);
    assert!((mids[0] - px(11.0)).abs() <= sample_px + 0.05);
    let circle = svg.lines().find(|l| l.starts_with("<circle") && l.contains("stroke=\"#000\"")).unwrap();
    let cx: f64 = circle.split("cx=\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap();
    assert!((cx - px(11.0)).abs() <= sample_px + 0.05);
}
