//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("angle {angle_rad} rad outside small-angle regime (|angle| < {limit} rad)")]
    SmallAngleViolation { angle_rad: f64, limit: f64 },
    #[error("invalid instrument config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("non-finite input {name} = {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("invalid source spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid scan plan: {0}")]
    InvalidPlan(String),
    #[error("shear values not realizable with walk-off {walkoff_m} m: {offending:?} (need |gamma| < 0.1 rad)")]
    UnrealizableShear { walkoff_m: f64, offending: Vec<f64> },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing sidecar metadata file {0}")]
    MissingSidecar(String),
    #[error("unsupported dataset format version {found:?} (supported: {supported:?})")]
    UnsupportedVersion { found: String, supported: String },
    #[error("malformed sidecar {path}: {message}")]
    MalformedSidecar { path: String, message: String },
    #[error("malformed CSV {path} at line {line}: {message}")]
    MalformedCsv {
        path: String,
        line: u64,
        message: String,
    },
    #[error("dataset record table does not match plan mode: {0}")]
    ModeMismatch(String),
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("estimator failure: {0}")]
    EstimatorFailure(String),
    #[error("insufficient fringes in analysis window: {fringes:.2} < {required}")]
    InsufficientFringes { fringes: f64, required: f64 },
    #[error("aggregation inconsistency: envelope discontinuity {jump:.3} > {limit} between overlapping traces")]
    AggregationInconsistency { jump: f64, limit: f64 },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("bad initialization: {0}")]
    Initialization(String),
    #[error("fit did not converge after {iterations} iterations (last residual norm {residual_norm:.6e})")]
    NonConvergence {
        iterations: usize,
        residual_norm: f64,
    },
}
