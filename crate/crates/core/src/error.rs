use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("p = {0} is not prime; unbiased multiports are only built for prime mode counts")]
    NotPrime(usize),
    #[error("operator acts on {expected} modes but the state has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operation requires a single-party state")]
    NotSingleParty,
    #[error("operation requires a bipartite state")]
    NotBipartite,
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("photon number {found} exceeds the expansion guard of {guard}")]
    ExpansionGuard { found: usize, guard: usize },
    #[error("efficiency {0} outside [0, 1]")]
    InvalidEfficiency(f64),
    #[error("gain {0} must be finite and non-negative")]
    InvalidGain(f64),
    #[error("setting index {setting} out of range for p = {p}")]
    InvalidSetting { setting: usize, p: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("criterion {kind} requires p = 3, got p = {p}")]
    KindRequiresThreeModes { kind: &'static str, p: usize },
    #[error("no sign change of the witness in (0, 1]: {0}")]
    NoBracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
