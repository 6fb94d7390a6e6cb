use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Bloch vector: radius {radius} exceeds 1 + {slack:e}")]
    InvalidState { radius: f64, slack: f64 },

    #[error("degenerate direction: the Bloch vector has zero length")]
    DegenerateDirection,

    #[error("integrator overshoot: radius {radius} after a step of dt = {dt}; reduce the step size")]
    Overshoot { radius: f64, dt: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("radius {r:e} is at or below r_min = {r_min:e}; step the purity instead")]
    RadialSingular { r: f64, r_min: f64 },

    #[error("purity 1 - {epsilon:e} is unattainable with inefficiency {delta:e} (requires epsilon >= delta/2)")]
    Unattainable { epsilon: f64, delta: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("log-entropy drift is singular at s = 0 for eta < 1")]
    SingularDrift,

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("numeric underflow: {0}")]
    Underflow(String),

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("for eta = 1 the stationary purity distribution is a delta function at p = 1")]
    DeltaLimit,

    #[error("time step {dt:e} violates the explicit stability bound {max:e}")]
    Cfl { dt: f64, max: f64 },

    #[error("negative density {value:e} in cell {cell}")]
    NegativeDensity { cell: usize, value: f64 },

    #[error("outside the asymptotic regime: {0}")]
    Regime(String),

    #[error("inconsistent result: {0}")]
    Inconsistent(String),

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what))
    }
}
