use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid molecule: {0}")]
    InvalidMolecule(String),
    #[error("invalid quantum number: {0}")]
    InvalidQuantumNumber(String),
    #[error("non-finite kick strength {0}")]
    NonFiniteKick(f64),
    #[error("invalid pulse train: {0}")]
    InvalidTrain(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("thermal ensemble is empty after applying the population cutoff")]
    EmptyEnsemble,
    #[error("intensity profile has no samples")]
    EmptyProfile,
    #[error("integration failed at t = {time:e} s: step size {step:e} s underflowed")]
    IntegrationFailure { time: f64, step: f64 },
    #[error("basis truncation did not converge up to J_max = {0}")]
    TruncationFailure(u32),
    #[error("sampling error: {0}")]
    Sampling(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
