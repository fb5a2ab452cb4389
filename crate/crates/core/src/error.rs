use thiserror::Error;

/// Errors raised by the potential-theory routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("touching intervals rejected in strict mode at {0}")]
    Touching(f64),

    #[error("invalid gap system: {0}")]
    InvalidGaps(String),

    #[error("degenerate Möbius reduction: {0}")]
    DegenerateReduction(String),

    #[error("resolution too small: {got} nodes per interval (need at least {min})")]
    ResolutionTooSmall { got: usize, min: usize },

    #[error("components {0} and {1} are closer than the resolvable separation")]
    ComponentsTooClose(usize, usize),

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("point {0} lies on the compact set")]
    OnSet(f64),

    #[error("pole too close to the set: distance {0:e}")]
    PoleTooClose(f64),

    #[error("set has no interior gap")]
    NoGap,

    #[error("maximization failed on gap {0}: gap below resolution")]
    GapBelowResolution(usize),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("parameter out of domain for {family}: {reason}")]
    Domain { family: &'static str, reason: String },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("cover violation: {0}")]
    Cover(String),

    #[error("density targets unachievable in block [{lo}, {hi}]")]
    DensityUnachievable { lo: f64, hi: f64 },

    #[error("grid: {0}")]
    Grid(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
