use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration at `{path}`: {reason}")]
    Config { path: String, reason: String },
    #[error("unstable crystal: {0}")]
    Instability(String),
    #[error("mode `{0}` not present in the spectrum")]
    UnknownMode(String),
    #[error("Hilbert space dimension {dim} exceeds the limit of {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("step size underflow at t = {t:e} s (step {step:e} s); the fastest frequency scale is {freq_scale:e} rad/s")]
    Stiffness { t: f64, step: f64, freq_scale: f64 },
    #[error("integrator exceeded {0} steps")]
    MaxSteps(usize),
    #[error("non-finite value encountered during propagation at t = {0:e} s")]
    NonFinite(f64),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("optimization failed: {0}")]
    Optimization(String),
    #[error("compilation failed: {0}")]
    Compile(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("error budget is missing: {0}")]
    BudgetIncomplete(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { path: path.into(), reason: reason.into() }
    }

    /// True for errors caused by malformed user input rather than a failed computation.
    pub fn is_schema(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
