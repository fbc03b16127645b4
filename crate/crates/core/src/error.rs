use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("object does not touch the finger (clearance {clearance:.3e} mm)")]
    NoContact { clearance: f64 },
    #[error("object penetrates the finger (clearance {clearance:.3e} mm)")]
    Penetration { clearance: f64 },
    #[error("grasp lost: {0}")]
    GraspLost(String),
    #[error("step too large: {0}")]
    StepTooLarge(String),
    #[error("pulling finger angle {angle:.4} rad too close to the palm (guard {guard} rad)")]
    SingularAngle { angle: f64, guard: f64 },
    #[error("contact moment arm {0} mm is too small")]
    SingularMomentArm(f64),
    #[error("degenerate calibration fit: {0}")]
    DegenerateFit(String),
    #[error("series of length {len} is shorter than the smoothing window {window}")]
    SeriesTooShort { len: usize, window: usize },
    #[error("peak has zero width")]
    ZeroWidth,
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("class {class} has {count} samples, fewer than {folds} folds")]
    InsufficientClassSamples { class: usize, count: usize, folds: usize },
    #[error("need at least two classes, found {0}")]
    SingleClass(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: schema mismatch: {detail}")]
    Schema { path: PathBuf, detail: String },
    #[error("{path}: content hash mismatch (manifest {expected}, file {actual})")]
    HashMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("unknown channel index {index} (array has {count} channels)")]
    UnknownChannel { index: usize, count: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            detail: detail.into(),
        }
    }
}
