use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not Hermitian (max |H - H^dagger| = {deviation:.3e}, scale {scale:.3e})")]
    NotHermitian { deviation: f64, scale: f64 },

    #[error("eigensolver did not converge (residual {residual:.3e}, limit {limit:.3e})")]
    NotConverged { residual: f64, limit: f64 },

    #[error("<Fz> = {value} is not within 0.01 of an allowed projection; field too close to a degeneracy")]
    AmbiguousProjection { value: f64 },

    #[error("state labeling failed: {0}")]
    Labeling(String),

    #[error("unknown state label {0}")]
    UnknownLabel(String),

    #[error("transition {upper} -> {lower} is inverted at this field (E_upper < E_lower)")]
    InvertedTransition { upper: String, lower: String },

    #[error("finite-difference step at B0 = {b0} T spans a labeling discontinuity (D(h) = {coarse:.6e}, D(h/2) = {fine:.6e} Hz/T)")]
    LabelCrossing { b0: f64, coarse: f64, fine: f64 },

    #[error("df/dB has no sign change on [{low} T, {high} T]: gradients {grad_low:.6e} and {grad_high:.6e} Hz/T")]
    NoSignChange {
        low: f64,
        high: f64,
        grad_low: f64,
        grad_high: f64,
    },

    #[error("root finder exhausted {iterations} iterations (bracket width {width:.3e})")]
    RootNotFound { iterations: usize, width: f64 },

    #[error("position ({x:.6e}, {z:.6e}) m lies inside a conductor")]
    InsideConductor { x: f64, z: f64 },

    #[error("implant region [{x_min:.6e}, {x_max:.6e}] m does not lie inside a CPW gap")]
    ImplantOverlapsConductor { x_min: f64, x_max: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite data: {0}")]
    NonFinite(String),

    #[error("echo signal vanishes; cannot normalize")]
    ZeroSignal,

    #[error("expected two spectral peaks, found {0}")]
    PeakCount(usize),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {message}")]
    Data { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("trace too short: {samples} samples (need at least {min})")]
    TraceTooShort { samples: usize, min: usize },
}
