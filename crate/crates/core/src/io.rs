//! On-disk formats: TOML configuration, per-run trace files, the dataset
//! manifest, feature matrices and trained models.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! text file reads back bit-for-bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{ClassifierConfig, TrainedModel, MODEL_FORMAT, MODEL_VERSION};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureMatrix};
use crate::geometry::{HandGeometry, Side};
use crate::palm_control::ControllerConfig;
use crate::procedure::{
    ProcedureConfig, RejectedRun, SensorTrace, Shape, SimulatedDataset, SimulationConfig, TraceMeta, TraceSample,
    TRACE_SCHEMA_VERSION,
};
use crate::scalar::Real;
use crate::sensor_model::SensorConfig;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const FEATURES_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";
/// Environment variable naming the configuration file used when none is given.
pub const CONFIG_ENV: &str = "ROLLSENSE_CONFIG";

const TRACE_MAGIC: &str = "# rollsense trace";
const FEATURES_MAGIC: &str = "# rollsense features";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub objects: Vec<Shape>,
    pub runs_per_object: usize,
    pub seed: u64,
    /// Placements tried per run before the dataset is abandoned.
    pub max_attempts: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            objects: Shape::ALL.to_vec(),
            runs_per_object: 30,
            seed: 0,
            max_attempts: 5,
        }
    }
}

/// The whole configuration file. Every section and key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub dataset: DatasetConfig,
    pub hand: HandGeometry<f64>,
    pub controller: ControllerConfig<f64>,
    pub sensor: SensorConfig<f64>,
    pub procedure: ProcedureConfig<f64>,
    pub features: FeatureConfig<f64>,
    pub classifier: ClassifierConfig,
}

impl Config {
    pub fn simulation(&self) -> SimulationConfig<f64> {
        SimulationConfig {
            hand: self.hand,
            controller: self.controller,
            sensor: self.sensor,
            procedure: self.procedure,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.simulation().validate()?;
        self.features.validate()?;
        if self.dataset.runs_per_object == 0 || self.dataset.max_attempts == 0 || self.dataset.objects.is_empty() {
            return Err(Error::InvalidConfig(format!("invalid dataset settings: {:?}", self.dataset)));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::schema(origin, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    /// Explicit path, else the file named by [`CONFIG_ENV`], else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises to TOML")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn side_code(s: Side) -> &'static str {
    match s {
        Side::Left => "L",
        Side::Right => "R",
    }
}

/// Column names of a trace body with `channels` pressure columns.
pub fn trace_columns(channels: usize) -> Vec<String> {
    let mut cols = vec!["timestamp_s".to_string()];
    cols.extend((1..=channels).map(|k| format!("p{k}")));
    cols.extend(["theta_pull_rad", "theta_push_rad", "palm_width_mm", "pull_side"].map(String::from));
    cols
}

/// Serialises a trace: `#` header lines, then a CSV table.
pub fn trace_to_string<T: Real>(trace: &SensorTrace<T>) -> String {
    let m = &trace.meta;
    let mut out = format!(
        "{TRACE_MAGIC}\n# schema_version = {}\n# label = {}\n# seed = {}\n# config_hash = {}\n",
        m.schema_version, m.label, m.seed, m.config_hash
    );
    out.push_str(&trace_columns(trace.channel_count()).join(","));
    out.push('\n');
    for s in &trace.samples {
        out.push_str(&s.timestamp.to_string());
        for p in &s.pressures {
            out.push(',');
            out.push_str(&p.to_string());
        }
        out.push_str(&format!(
            ",{},{},{},{}\n",
            s.theta_pull,
            s.theta_push,
            s.palm_width,
            side_code(s.pull_role)
        ));
    }
    out
}

fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.strip_prefix('#')?.trim();
    let (k, v) = rest.split_once('=')?;
    (k.trim() == key).then(|| v.trim())
}

fn parse_num<T: Real>(field: &str, path: &Path, row: usize) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::schema(path, format!("row {row}: '{field}' is not a number")))
}

pub fn trace_from_str<T: Real>(text: &str, path: &Path) -> Result<SensorTrace<T>> {
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_MAGIC) {
        return Err(Error::schema(path, "not a rollsense trace file"));
    }
    let mut take = |key: &str| -> Result<String> {
        lines
            .next()
            .and_then(|l| header_value(l, key))
            .map(str::to_string)
            .ok_or_else(|| Error::schema(path, format!("missing header field '{key}'")))
    };
    let version: u32 = take("schema_version")?
        .parse()
        .map_err(|_| Error::schema(path, "bad schema_version"))?;
    if version != TRACE_SCHEMA_VERSION {
        return Err(Error::schema(
            path,
            format!("trace schema version {version}, this build reads {TRACE_SCHEMA_VERSION}"),
        ));
    }
    let label: Shape = take("label")?.parse().map_err(|e: String| Error::schema(path, e))?;
    let seed: u64 = take("seed")?.parse().map_err(|_| Error::schema(path, "bad seed"))?;
    let config_hash = take("config_hash")?;

    let body: String = lines.collect::<Vec<_>>().join("\n");
    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::schema(path, e.to_string()))?
        .clone();
    let channels = headers.len().checked_sub(5).filter(|&c| c > 0).ok_or_else(|| {
        Error::schema(path, format!("trace has {} columns, expected at least 6", headers.len()))
    })?;
    if headers.iter().collect::<Vec<_>>() != trace_columns(channels).iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::schema(path, "unexpected trace columns"));
    }
    let mut samples = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::schema(path, e.to_string()))?;
        let num = |k: usize| parse_num::<T>(&rec[k], path, row + 1);
        let pull_role = match rec[channels + 4].trim() {
            "L" => Side::Left,
            "R" => Side::Right,
            other => return Err(Error::schema(path, format!("row {}: bad pull side '{other}'", row + 1))),
        };
        samples.push(TraceSample {
            timestamp: num(0)?,
            pressures: (1..=channels).map(num).collect::<Result<_>>()?,
            theta_pull: num(channels + 1)?,
            theta_push: num(channels + 2)?,
            palm_width: num(channels + 3)?,
            pull_role,
        });
    }
    Ok(SensorTrace {
        meta: TraceMeta {
            schema_version: version,
            label,
            seed,
            config_hash,
        },
        samples,
    })
}

pub fn save_trace<T: Real>(path: &Path, trace: &SensorTrace<T>) -> Result<String> {
    let text = trace_to_string(trace);
    write_bytes(path, text.as_bytes())?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn load_trace<T: Real>(path: &Path) -> Result<SensorTrace<T>> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::schema(path, "trace is not UTF-8"))?;
    trace_from_str(&text, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the dataset directory.
    pub file: String,
    pub label: Shape,
    pub seed: u64,
    pub config_hash: String,
    pub sha256: String,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub generator: String,
    pub master_seed: u64,
    pub runs_per_object: usize,
    pub objects: Vec<Shape>,
    pub config_file: String,
    pub config_hash: String,
    pub runs: Vec<ManifestEntry>,
    /// Placements that lost the object and were replaced.
    pub rejected: Vec<RejectedRun>,
}

pub fn trace_file_name(index: usize, label: Shape) -> String {
    format!("run_{index:03}_{label}.csv")
}

/// Writes traces, the effective configuration and the manifest into `dir`.
pub fn write_dataset(dir: &Path, config: &Config, data: &SimulatedDataset<f64>) -> Result<DatasetManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_bytes(&dir.join(CONFIG_FILE), config.to_toml_string().as_bytes())?;
    let mut runs = Vec::with_capacity(data.runs.len());
    for (i, (run, out)) in data.runs.iter().enumerate() {
        let file = trace_file_name(i, run.shape);
        let sha256 = save_trace(&dir.join(&file), &out.trace)?;
        runs.push(ManifestEntry {
            file,
            label: run.shape,
            seed: run.seed,
            config_hash: out.trace.meta.config_hash.clone(),
            sha256,
            frames: out.trace.len(),
        });
    }
    let manifest = DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        generator: format!("rollsense {}", env!("CARGO_PKG_VERSION")),
        master_seed: config.dataset.seed,
        runs_per_object: config.dataset.runs_per_object,
        objects: config.dataset.objects.clone(),
        config_file: CONFIG_FILE.into(),
        config_hash: config.simulation().fingerprint(),
        runs,
        rejected: data.rejected.clone(),
    };
    save_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Reads a dataset back, checking every file against the manifest.
pub fn load_dataset(dir: &Path) -> Result<(DatasetManifest, Vec<SensorTrace<f64>>)> {
    let mpath = dir.join(MANIFEST_FILE);
    let manifest: DatasetManifest = load_json(&mpath)?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(Error::schema(
            &mpath,
            format!(
                "manifest schema version {}, this build reads {MANIFEST_SCHEMA_VERSION}",
                manifest.schema_version
            ),
        ));
    }
    let cpath = dir.join(&manifest.config_file);
    let config = Config::load(&cpath)?;
    let actual = config.simulation().fingerprint();
    if actual != manifest.config_hash {
        return Err(Error::HashMismatch {
            path: cpath,
            expected: manifest.config_hash.clone(),
            actual,
        });
    }
    let mut traces = Vec::with_capacity(manifest.runs.len());
    for entry in &manifest.runs {
        let path = dir.join(&entry.file);
        let bytes = read_bytes(&path)?;
        let digest = sha256_hex(&bytes);
        if digest != entry.sha256 {
            return Err(Error::HashMismatch {
                path,
                expected: entry.sha256.clone(),
                actual: digest,
            });
        }
        let text = String::from_utf8(bytes).map_err(|_| Error::schema(&path, "trace is not UTF-8"))?;
        let trace: SensorTrace<f64> = trace_from_str(&text, &path)?;
        if trace.meta.config_hash != manifest.config_hash || trace.meta.config_hash != entry.config_hash {
            return Err(Error::HashMismatch {
                path,
                expected: manifest.config_hash.clone(),
                actual: trace.meta.config_hash,
            });
        }
        if trace.meta.label != entry.label || trace.meta.seed != entry.seed || trace.len() != entry.frames {
            return Err(Error::schema(&path, "header disagrees with the manifest entry"));
        }
        traces.push(trace);
    }
    Ok((manifest, traces))
}

pub fn features_to_string<T: Real>(m: &FeatureMatrix<T>) -> String {
    let mut out = format!("{FEATURES_MAGIC}\n# schema_version = {FEATURES_SCHEMA_VERSION}\nlabel");
    for n in &m.names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (label, row) in m.labels.iter().zip(&m.rows) {
        out.push_str(label.name());
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn features_from_str<T: Real>(text: &str, path: &Path) -> Result<FeatureMatrix<T>> {
    let mut lines = text.lines();
    if lines.next() != Some(FEATURES_MAGIC) {
        return Err(Error::schema(path, "not a rollsense feature file"));
    }
    let version: u32 = lines
        .next()
        .and_then(|l| header_value(l, "schema_version"))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::schema(path, "missing schema_version"))?;
    if version != FEATURES_SCHEMA_VERSION {
        return Err(Error::schema(
            path,
            format!("feature schema version {version}, this build reads {FEATURES_SCHEMA_VERSION}"),
        ));
    }
    let body: String = lines.collect::<Vec<_>>().join("\n");
    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::schema(path, e.to_string()))?
        .clone();
    if headers.get(0) != Some("label") || headers.len() < 2 {
        return Err(Error::schema(path, "first column must be 'label'"));
    }
    let names: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::schema(path, e.to_string()))?;
        labels.push(rec[0].parse::<Shape>().map_err(|e| Error::schema(path, e))?);
        rows.push(
            (1..rec.len())
                .map(|k| parse_num(&rec[k], path, row + 1))
                .collect::<Result<Vec<T>>>()?,
        );
    }
    Ok(FeatureMatrix { names, labels, rows })
}

pub fn save_features<T: Real>(path: &Path, m: &FeatureMatrix<T>) -> Result<()> {
    write_bytes(path, features_to_string(m).as_bytes())
}

pub fn load_features<T: Real>(path: &Path) -> Result<FeatureMatrix<T>> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::schema(path, "feature file is not UTF-8"))?;
    features_from_str(&text, path)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serialises to JSON");
    s.push('\n');
    s
}

pub fn save_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    write_bytes(path, to_json(value).as_bytes())
}

pub fn load_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::schema(path, e.to_string()))
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    save_json(path, model)
}

/// Loads a model, rejecting other formats and versions with a clear message.
pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let value: serde_json::Value = load_json(path)?;
    let format = value.get("format").and_then(|v| v.as_str()).unwrap_or("");
    if format != MODEL_FORMAT {
        return Err(Error::schema(path, format!("not a {MODEL_FORMAT} file")));
    }
    let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
    if version != u64::from(MODEL_VERSION) {
        return Err(Error::schema(
            path,
            format!("model format version {version}, this build reads {MODEL_VERSION}"),
        ));
    }
    serde_json::from_value(value).map_err(|e| Error::schema(path, e.to_string()))
}

/// Writes `text` to `path`, creating parent directories.
pub fn save_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}
