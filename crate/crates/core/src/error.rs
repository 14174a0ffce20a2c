use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice dimension {dim} along axis {axis} is too small (need at least {min})")]
    DimensionTooSmall { axis: usize, dim: usize, min: usize },

    #[error("invalid surface grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate frame at node ({k1}, {k2}): |T1 x T2| = {value:e}")]
    DegenerateFrame { k1: usize, k2: usize, value: f64 },

    #[error("singular metric at node ({k1}, {k2}): det g = {value:e}")]
    SingularMetric { k1: usize, k2: usize, value: f64 },

    #[error("tensor valence {0} is not supported")]
    UnsupportedValence(usize),

    #[error("tensor index mismatch: {0}")]
    IndexMismatch(String),

    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),

    #[error("thin-shell assumption violated at node {node}: h0 * |b| = {value}")]
    ThinShellViolation { node: usize, value: f64 },

    #[error("shell coefficients missing or built for a different lattice")]
    MissingCoefficients,

    #[error("invalid fluid parameters: {0}")]
    InvalidFluid(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("q1 = {q1} outside [0, {length}]")]
    OutOfRange { q1: f64, length: f64 },

    #[error("instability detected at step {step}: max displacement {max_disp:e} exceeds {limit:e}")]
    Unstable { step: u64, max_disp: f64, limit: f64 },

    #[error("grids do not nest: {from:?} -> {to:?}")]
    NonNested { from: (usize, usize), to: (usize, usize) },

    #[error("relative difference undefined: reference displacement norm is zero")]
    ZeroDenominator,

    #[error("sample times differ between runs")]
    TimeSetMismatch,

    #[error("convergence study needs {needed} runs, got {got}")]
    InsufficientRuns { needed: usize, got: usize },

    #[error("zero norm in convergence rate estimate")]
    ZeroNorm,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
