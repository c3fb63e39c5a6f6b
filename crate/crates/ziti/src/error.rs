use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("adaptive integration did not converge on [{a}, {b}]")]
    Integration { a: f64, b: f64 },
    #[error("non-finite value at {0}")]
    NonFinite(String),
    #[error("degenerate spacing: {0}")]
    DegenerateSpacing(String),
    #[error("singular pivot block {block}")]
    SingularBlock { block: usize },
    #[error("malformed system: {0}")]
    Structure(String),
    #[error("solution blew up at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integration { .. }
                | Error::NonFinite(_)
                | Error::SingularBlock { .. }
                | Error::BlowUp { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
