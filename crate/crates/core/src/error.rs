use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model parameter failed validation; `name` is the offending field.
    #[error("{name} {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate interval [{lower}, {upper}]")]
    DegenerateInterval { lower: f64, upper: f64 },

    /// Stationary law requested for drifts that do not point towards the threshold.
    #[error("no stationary law: requires mu1 > 0 and mu2 < 0 (got mu1 = {mu1}, mu2 = {mu2})")]
    NoStationaryLaw { mu1: f64, mu2: f64 },

    /// Quadrature could not reach the requested tolerance; carries the best estimate.
    #[error("accuracy not reached: estimate {estimate:e} with error {error:e} (target {target:e})")]
    Accuracy { estimate: f64, error: f64, target: f64 },

    #[error("integrand returned a non-finite value at {at}")]
    Integrand { at: f64 },

    #[error("invalid settings: {0}")]
    Settings(String),

    #[error("invalid simulation config: {0}")]
    Config(String),

    /// A control policy returned a volatility outside the admissible pair.
    #[error("policy returned inadmissible volatility {value} at t = {t}, state = {state}")]
    Policy { t: f64, state: f64, value: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
