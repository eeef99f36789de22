use thiserror::Error;

/// Errors raised by lattice construction, evolution and the scenario builders.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// A parameter or dimension violates its invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An operation was called with arguments outside its contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// The coupler width cannot be calibrated (packet does not move).
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// The requested channel holds no population.
    #[error("centroid undefined: channel {channel} holds population {population:e}")]
    EmptyChannel { channel: usize, population: f64 },

    /// A non-finite amplitude appeared during integration.
    #[error("numerical failure at t = {time}: {detail}")]
    Numerical { time: f64, detail: String },

    /// The packet did not leave the coupler region before the run ended.
    #[error("packet still inside the coupler region at t = {time} (centroid {centroid:.3}, needed {needed:.3})")]
    Timeout {
        time: f64,
        centroid: f64,
        needed: f64,
    },
}

impl SimError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        SimError::Usage(msg.into())
    }

    /// True for errors that come from the numerics rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, SimError::Numerical { .. } | SimError::Timeout { .. })
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
