use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rollsense::classify::{
    compare_methods, comparison_table, cross_validate, permutation_baseline, ComparisonRow, EvalReport, Method,
    TrainedModel,
};
use rollsense::features::extract_all;
use rollsense::io::{self, Config, CONFIG_FILE};
use rollsense::procedure::simulate_dataset;
use rollsense::{plot, FeatureMatrix, SensorTrace, Shape, Simulator};

/// Reference figures the fig2 report is compared against.
const REF_ROTATION_DYNAMIC_DEG: f64 = 86.6;
const REF_ROTATION_FIXED_DEG: f64 = 36.4;
const REF_ARC_DYNAMIC_MM: f64 = 34.2;
const REF_ARC_FIXED_MM: f64 = 21.0;
const REF_ROTATION_INCREASE_PCT: f64 = 137.9;
const REF_ARC_INCREASE_PCT: f64 = 62.9;

#[derive(Parser)]
#[command(name = "rollsense", version, about = "Rolling tactile exploration: simulate, extract, classify")]
struct Cli {
    /// Configuration file (TOML). Falls back to $ROLLSENSE_CONFIG, then built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a labelled dataset: one trace file per run plus a manifest.
    Simulate(SimulateArgs),
    /// Extract the peak feature matrix from a dataset directory.
    Extract(ExtractArgs),
    /// Fit a classifier on a feature matrix.
    Train(TrainArgs),
    /// Cross-validate, compare against baselines and score a model.
    Eval(EvalArgs),
    /// Fixed versus dynamic palm width over one pull of a cylinder.
    Fig2(Fig2Args),
    /// Write SVG plots for a trace or a feature matrix.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Comma-separated shapes (circle, hexagon, square).
    #[arg(long, value_delimiter = ',', value_parser = parse_shape)]
    objects: Option<Vec<Shape>>,
    #[arg(long)]
    runs_per_object: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    /// Dataset directory written by `simulate`.
    #[arg(long)]
    dataset: PathBuf,
    /// Feature matrix file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Subspace,
    Knn,
    Lda,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "subspace")]
    method: MethodArg,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// Also write the full evaluation as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct Fig2Args {
    /// Directory for fig2.json and fig2.svg.
    #[arg(long)]
    out: PathBuf,
    /// Cylinder diameter, mm.
    #[arg(long, default_value_t = 30.0)]
    diameter: f64,
    /// Palm width held during the fixed-palm pull, mm.
    #[arg(long, default_value_t = 68.5)]
    fixed_width: f64,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["trace", "features"]))]
struct PlotArgs {
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    /// Comma-separated sensor numbers, 1-based (default: all).
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn parse_shape(s: &str) -> std::result::Result<Shape, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let explicit = cli.config.as_deref();
    match cli.command {
        Command::Simulate(a) => simulate(explicit, a),
        Command::Extract(a) => extract(explicit, a),
        Command::Train(a) => train(explicit, a),
        Command::Eval(a) => eval(explicit, a),
        Command::Fig2(a) => fig2(explicit, a),
        Command::Plot(a) => plot_cmd(explicit, a),
    }
}

fn load_config(explicit: Option<&Path>) -> Result<Config> {
    Config::resolve(explicit).context("loading configuration")
}

fn simulate(explicit: Option<&Path>, a: SimulateArgs) -> Result<()> {
    let mut config = load_config(explicit)?;
    if let Some(objects) = a.objects {
        config.dataset.objects = objects;
    }
    if let Some(n) = a.runs_per_object {
        config.dataset.runs_per_object = n;
    }
    if let Some(seed) = a.seed {
        config.dataset.seed = seed;
    }
    config.validate()?;
    let sim = Simulator::new(config.simulation())?;
    let d = &config.dataset;
    let data = simulate_dataset(&sim, &d.objects, d.runs_per_object, d.seed, d.max_attempts)?;
    let manifest = io::write_dataset(&a.out, &config, &data)?;
    let frames = manifest.runs.iter().map(|r| r.frames);
    let (lo, hi) = frames.fold((usize::MAX, 0), |(lo, hi), f| (lo.min(f), hi.max(f)));
    println!(
        "wrote {} traces to {} (frames {lo}..={hi}, rejected placements: {})",
        manifest.runs.len(),
        a.out.display(),
        manifest.rejected.len()
    );
    Ok(())
}

fn extract(explicit: Option<&Path>, a: ExtractArgs) -> Result<()> {
    // Feature settings come from the dataset's own config unless one is given.
    let config = match explicit {
        Some(p) => Config::load(p)?,
        None => Config::load(&a.dataset.join(CONFIG_FILE))?,
    };
    let (_, traces) = io::load_dataset(&a.dataset)?;
    let matrix = extract_all(&traces, &config.features)?;
    io::save_features(&a.out, &matrix)?;
    println!("wrote {}x{} feature matrix to {}", matrix.len(), matrix.width(), a.out.display());
    Ok(())
}

fn method_for(arg: MethodArg, config: &Config) -> Method {
    let c = &config.classifier;
    match arg {
        MethodArg::Subspace => Method::SubspaceKnn(c.ensemble),
        MethodArg::Knn => Method::Knn { k: c.ensemble.k },
        MethodArg::Lda => Method::Lda { ridge: c.lda_ridge },
    }
}

fn train(explicit: Option<&Path>, a: TrainArgs) -> Result<()> {
    let config = load_config(explicit)?;
    let m: FeatureMatrix = io::load_features(&a.features)?;
    let method = method_for(a.method, &config);
    let model = TrainedModel::fit(
        &m.to_f64_rows(),
        &m.class_indices(),
        m.names.clone(),
        method,
        config.classifier.variance_target,
        a.seed,
    )?;
    io::save_model(&a.out, &model)?;
    println!(
        "trained {} on {} samples, {} of {} principal components kept; wrote {}",
        method.name(),
        m.len(),
        model.pca.retained(),
        model.pca.input_dim(),
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    cross_validation: EvalReport,
    comparison: Vec<ComparisonRow>,
    permutation_accuracies: Vec<f64>,
    model_on_features: EvalReport,
}

fn eval(explicit: Option<&Path>, a: EvalArgs) -> Result<()> {
    let config = load_config(explicit)?;
    let model = io::load_model(&a.model)?;
    let m: FeatureMatrix = io::load_features(&a.features)?;
    if !model.feature_names.is_empty() && model.feature_names != m.names {
        bail!(
            "{} has columns that differ from the ones {} was trained on",
            a.features.display(),
            a.model.display()
        );
    }
    let rows = m.to_f64_rows();
    let labels = m.class_indices();
    let cfg = &config.classifier;

    let cv = cross_validate(&rows, &labels, model.method, cfg, model.seed)?;
    println!("{}-fold cross-validation, seed {}", cfg.folds, model.seed);
    print!("{cv}");

    let results = compare_methods(&rows, &labels, cfg, model.seed)?;
    let table = comparison_table(&results);
    println!();
    println!("{:<24}{:>10}{:>14}", "method", "accuracy", "mean of folds");
    for r in &table {
        println!("{:<24}{:>9.1}%{:>13.1}%", r.method, 100.0 * r.accuracy, 100.0 * r.mean_fold_accuracy);
    }

    let perm = permutation_baseline(&rows, &labels, model.method, cfg, model.seed, cfg.permutation_repeats)?;
    let mean = perm.iter().sum::<f64>() / perm.len().max(1) as f64;
    println!();
    println!("shuffled-label baseline over {} repeats: {:.1}%", perm.len(), 100.0 * mean);

    let applied = model.evaluate(&rows, &labels);
    println!();
    println!("trained model applied to {}", a.features.display());
    print!("{applied}");

    if let Some(path) = a.json {
        let out = EvalOutput {
            cross_validation: cv,
            comparison: table,
            permutation_accuracies: perm,
            model_on_features: applied,
        };
        io::save_json(&path, &out)?;
    }
    Ok(())
}

fn fig2(explicit: Option<&Path>, a: Fig2Args) -> Result<()> {
    let config = load_config(explicit)?;
    let start = Instant::now();
    let sim = Simulator::with_ideal_sensors(config.simulation())?;
    let r = sim.fig2_experiment(a.diameter, a.fixed_width)?;
    let elapsed = start.elapsed();
    println!("{:<26}{:>12}{:>12}", "", "simulated", "reference");
    let rows = [
        ("rotation, dynamic (deg)", r.rotation_dynamic_deg, REF_ROTATION_DYNAMIC_DEG),
        ("rotation, fixed (deg)", r.rotation_fixed_deg, REF_ROTATION_FIXED_DEG),
        ("rotation increase (%)", r.rotation_increase_pct, REF_ROTATION_INCREASE_PCT),
        ("contact arc, dynamic (mm)", r.arc_dynamic_mm, REF_ARC_DYNAMIC_MM),
        ("contact arc, fixed (mm)", r.arc_fixed_mm, REF_ARC_FIXED_MM),
        ("arc increase (%)", r.arc_increase_pct, REF_ARC_INCREASE_PCT),
    ];
    for (name, sim_v, ref_v) in rows {
        println!("{name:<26}{sim_v:>12.1}{ref_v:>12.1}");
    }
    println!("max finger parallelism error (deg): {:.3}", r.max_parallel_error_deg);
    println!("elapsed: {:.2} s", elapsed.as_secs_f64());
    io::save_json(&a.out.join("fig2.json"), &r)?;
    io::save_text(&a.out.join("fig2.svg"), &plot::fig2_chart(&r))?;
    Ok(())
}

fn channel_indices(requested: Option<Vec<usize>>, available: usize) -> Result<Vec<usize>> {
    match requested {
        None => Ok((0..available).collect()),
        Some(list) => list
            .into_iter()
            .map(|c| {
                if c == 0 || c > available {
                    bail!("unknown channel {c}: sensors are numbered 1..={available}")
                }
                Ok(c - 1)
            })
            .collect(),
    }
}

fn plot_cmd(explicit: Option<&Path>, a: PlotArgs) -> Result<()> {
    let config = load_config(explicit)?;
    let mut written = Vec::new();
    if let Some(path) = &a.trace {
        let trace: SensorTrace = io::load_trace(path)?;
        let channels = channel_indices(a.channels, trace.channel_count())?;
        let heat = a.out.join("heatmap.svg");
        io::save_text(&heat, &plot::heatmap(&trace))?;
        written.push(heat);
        let lines = a.out.join("channels.svg");
        io::save_text(&lines, &plot::channel_lines(&trace, &channels)?)?;
        written.push(lines);
        for (c, svg) in plot::trace_peak_markers(&trace, &channels, &config.features)? {
            let p = a.out.join(format!("peaks_s{}.svg", c + 1));
            io::save_text(&p, &svg)?;
            written.push(p);
        }
    } else if let Some(path) = &a.features {
        let m: FeatureMatrix = io::load_features(path)?;
        let ppc = config.features.peaks_per_channel;
        let stride = ppc * rollsense::features::FEATURES_PER_PEAK;
        let available = if stride == 0 { 0 } else { m.width() / stride };
        let channels = channel_indices(a.channels, available)?;
        let p = a.out.join("features.svg");
        io::save_text(&p, &plot::feature_scatter(&m, &channels, ppc)?)?;
        written.push(p);
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
