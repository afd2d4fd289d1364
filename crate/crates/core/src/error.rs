use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Band-limited resampling would lose or fold content.
    #[error("aliasing: {reason} (fraction {fraction:.3e} > tolerance {tolerance:.1e})")]
    Aliasing {
        reason: String,
        fraction: f64,
        tolerance: f64,
    },

    #[error("chirp aliasing: phase gradient {gradient:.4} exceeds Nyquist {nyquist:.4} ({detail})")]
    ChirpAliasing {
        gradient: f64,
        nyquist: f64,
        detail: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("frame mismatch: expected {expected}, found {found}")]
    FrameMismatch { expected: String, found: String },

    #[error("kernel singular at t = {0} (|sin t| too small)")]
    SingularTime(f64),

    #[error("weight |cos t|^alpha not locally integrable for p = {p}, d = {d} (needs p > 1 + 2/d)")]
    NonIntegrableWeight { p: f64, d: usize },

    #[error("nonlinearity overflow: |u|^(p-1) = {0:e}")]
    Overflow(f64),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("optimizer: {0}")]
    Optimizer(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("requested time {requested} outside recorded window [{start}, {end}]")]
    Window { requested: f64, start: f64, end: f64 },

    #[error("insufficient cadence: {0}")]
    Cadence(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
