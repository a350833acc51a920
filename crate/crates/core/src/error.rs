use thiserror::Error;

/// Errors raised by the circuit models, the designer and the simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its physical domain.
    #[error("invalid {field} = {value:e}: {reason}")]
    Domain {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A frequency range or grid density is unusable.
    #[error("invalid range: {0}")]
    Range(String),

    /// `g_m2 * R_X1 == 1`: the damping term vanishes and Q is unbounded.
    #[error("quality factor is infinite (g_m2*R_X1 = 1, oscillation boundary)")]
    InfiniteQ,

    /// An oscillator configuration that cannot be simulated.
    #[error("invalid oscillator configuration: {0}")]
    Config(String),

    /// The integrated state stopped being finite.
    #[error("simulation diverged at t = {time:e} s")]
    Divergence { time: f64 },

    /// Not enough signal to measure a frequency or phase.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// The requested design needs non-positive or non-finite bias currents.
    #[error("design not realizable: {0}")]
    Design(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            field,
            value,
            reason: "must be finite and > 0",
        })
    }
}

pub(crate) fn non_negative(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            field,
            value,
            reason: "must be finite and >= 0",
        })
    }
}
