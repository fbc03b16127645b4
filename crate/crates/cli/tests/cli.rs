use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rollsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rollsense"))
        .args(args)
        .env_remove("ROLLSENSE_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn one_run_per_object_writes_three_traces_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    let o = rollsense(&["simulate", "--runs-per-object", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = files_in(&out);
    let traces: Vec<_> = files.iter().filter(|f| f.ends_with(".csv")).collect();
    assert_eq!(traces.len(), 3);
    assert!(files.contains(&"manifest.json".to_string()));
    assert!(files.contains(&"config.toml".to_string()));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = ["a", "b"].map(|d| tmp.path().join(d));
    for d in &dirs {
        let o = rollsense(&[
            "simulate",
            "--runs-per-object",
            "1",
            "--seed",
            "7",
            "--objects",
            "hexagon,square",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let names = files_in(&dirs[0]);
    assert_eq!(names, files_in(&dirs[1]));
    for n in names {
        assert_eq!(fs::read(dirs[0].join(&n)).unwrap(), fs::read(dirs[1].join(&n)).unwrap(), "{n}");
    }
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(rollsense(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rollsense(&["simulate"]).status.code(), Some(1));
    assert_eq!(rollsense(&["simulate", "--objects", "cone", "--out", "x"]).status.code(), Some(1));
    assert_eq!(rollsense(&["plot", "--out", "x"]).status.code(), Some(1));
    assert_eq!(rollsense(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_2_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    let o = rollsense(&["plot", "--trace", missing.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.csv"));

    let model = tmp.path().join("model.json");
    fs::write(&model, "{\"format\": \"something-else\"}").unwrap();
    let o = rollsense(&["eval", "--model", model.to_str().unwrap(), "--features", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_comes_from_environment_when_not_given() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    fs::write(&cfg, "[dataset]\nruns_per_object = 1\nobjects = [\"circle\"]\n").unwrap();
    let out = tmp.path().join("ds");
    let o = Command::new(env!("CARGO_BIN_EXE_rollsense"))
        .args(["simulate", "--out", out.to_str().unwrap()])
        .env("ROLLSENSE_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(files_in(&out).iter().filter(|f| f.ends_with(".csv")).count(), 1);

    fs::write(&cfg, "[dataset]\nno_such_key = 3\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rollsense"))
        .args(["simulate", "--out", out.to_str().unwrap()])
        .env("ROLLSENSE_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_key"));
}

#[test]
fn fig2_reports_reference_increases() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rollsense(&["fig2", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("137.9") && text.contains("62.9"), "{text}");
    assert!(tmp.path().join("fig2.json").exists());
    assert!(fs::read_to_string(tmp.path().join("fig2.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn pipeline_extract_train_eval_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |s: &str| tmp.path().join(s).to_str().unwrap().to_owned();
    let o = rollsense(&["simulate", "--runs-per-object", "4", "--seed", "3", "--out", &p("ds")]);
    assert!(o.status.success());

    let o = rollsense(&["extract", "--dataset", &p("ds"), "--out", &p("features.csv")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("12x80"));

    let o = rollsense(&["train", "--features", &p("features.csv"), "--seed", "1", "--out", &p("model.json")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let cfg = tmp.path().join("quick.toml");
    fs::write(&cfg, "[classifier]\npermutation_repeats = 3\n").unwrap();
    let o = rollsense(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--model",
        &p("model.json"),
        "--features",
        &p("features.csv"),
        "--json",
        &p("eval.json"),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("rows true, columns predicted"));
    assert!(text.contains("linear discriminant") && text.contains("KNN"));
    assert!(Path::new(&p("eval.json")).exists());

    let o = rollsense(&["plot", "--features", &p("features.csv"), "--channels", "2,9", "--out", &p("plots")]);
    assert!(o.status.success());
    let o = rollsense(&["plot", "--trace", &p("ds/run_004_hexagon.csv"), "--channels", "3", "--out", &p("plots")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        files_in(&tmp.path().join("plots")),
        ["channels.svg", "features.svg", "heatmap.svg", "peaks_s3.svg"]
    );

    let o = rollsense(&["plot", "--features", &p("features.csv"), "--channels", "0", "--out", &p("plots")]);
    assert_eq!(o.status.code(), Some(2));
}
