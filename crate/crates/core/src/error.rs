use thiserror::Error;

/// Errors raised by the model, the simulator and the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A single parameter is out of its allowed range or not finite.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Parameters are individually valid but contradict each other
    /// (for example an interferometer delay that differs from the bin separation).
    #[error("inconsistent configuration: {0}")]
    Inconsistent(String),

    /// A rate formula left the regime where it is a probability.
    #[error("model regime violated: {0}")]
    Regime(String),

    /// Inverting the rate equations produced a negative photon number.
    #[error("inconsistent measurement: inferred {quantity} = {value:.6e} is negative")]
    NegativeEstimate { quantity: &'static str, value: f64 },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("csv line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error("amplitude table is not normalized (total probability {0})")]
    Unnormalized(f64),

    #[error("click stream is not sorted by gate index at position {0}")]
    UnsortedStream(usize),

    #[error("no accidental coincidences recorded; simulate more gates")]
    NoAccidentals,

    #[error("zero singles rate in {0}")]
    ZeroSingles(&'static str),

    #[error("fit did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("degenerate scan: {0}")]
    DegenerateScan(String),

    #[error("underdetermined fit: {0}")]
    Underdetermined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("{value} is not finite") })
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("{value} is outside [0, 1]") })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("{value} must be finite and >= 0") })
    }
}
