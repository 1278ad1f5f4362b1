use thiserror::Error;

/// Errors raised by the solver, the audits and the trajectory algebra.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("density is not strictly positive (min = {min:e})")]
    NonPositiveDensity { min: f64 },

    #[error("pressure potential undefined for gamma = {gamma} (|gamma - 1| < 1e-12)")]
    GammaOne { gamma: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("field is under-resolved: spectral tail fraction {tail:e} exceeds {tolerance:e}")]
    UnresolvedField { tail: f64, tolerance: f64 },

    #[error("bad resolution: {0}")]
    BadResolution(String),

    #[error("fields live on different domains")]
    DomainMismatch,

    #[error("requested {requested} Galerkin modes, at most {max} available")]
    TooManyModes { requested: usize, max: usize },

    #[error("density fell to {min:e} (floor {floor:e}) at t = {time}")]
    PositivityLost { time: f64, min: f64, floor: f64 },

    #[error("Courant number {courant:.3} exceeds bound {bound:.3} at t = {time}")]
    CflViolation { time: f64, courant: f64, bound: f64 },

    #[error("fixed-point iteration failed after {iterations} iterations (residual {residual:e}, growing = {growing}) at t = {time}")]
    FixedPointDiverged {
        time: f64,
        iterations: usize,
        residual: f64,
        growing: bool,
    },

    #[error("energy audit failed at t = {time}: slack {slack:e} < -{budget:e}")]
    AuditFailed { time: f64, slack: f64, budget: f64 },

    #[error("density bound violated at snapshot {index} (t = {time}): {detail}")]
    BoundViolated { index: usize, time: f64, detail: String },

    #[error("unsupported reference kind: {0}")]
    UnsupportedKind(String),

    #[error("fit window contains no samples")]
    WindowEmpty,

    #[error("time {time} is not covered by trajectory horizon {horizon}")]
    GridUncovered { time: f64, horizon: f64 },

    #[error("time {time} exceeds sampled horizon {horizon}")]
    HorizonExceeded { time: f64, horizon: f64 },

    #[error("seam mismatch at T = {time}: state gap {gap:e}, energy excess {energy_excess:e}")]
    SeamMismatch { time: f64, gap: f64, energy_excess: f64 },

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("candidates do not share initial data (distance {distance:e})")]
    MixedInitialData { distance: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
