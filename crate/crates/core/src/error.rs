use alloc::string::String;
use alloc::vec::Vec;

use crate::C64;

/// Errors raised while validating models or running the numerics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("system needs at least two levels, got {0}")]
    TooFewLevels(usize),
    #[error("energies must be finite and sorted ascending")]
    UnsortedEnergies,
    #[error("coupling for bath `{bath}` is {rows}x{cols}, expected {levels}x{levels}")]
    CouplingShape {
        bath: String,
        rows: usize,
        cols: usize,
        levels: usize,
    },
    #[error(
        "non-symmetric coupling for bath `{bath}`: entry ({row},{col}) differs from its transpose"
    )]
    NonSymmetricCoupling {
        bath: String,
        row: usize,
        col: usize,
    },
    #[error("coupling references unknown bath `{0}`")]
    UnknownBath(String),
    #[error("bath `{0}` has more than one coupling operator")]
    DuplicateBathCoupling(String),
    #[error("bath `{0}` is declared twice")]
    DuplicateBath(String),
    #[error("bath `{bath}`: {what} must be strictly positive, got {value}")]
    NonPositive {
        bath: String,
        what: &'static str,
        value: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cluster partition is invalid: {0}")]
    InvalidPartition(String),
    #[error("counting field has {got} components, system has {expected} baths")]
    CountingFieldLength { expected: usize, got: usize },
    #[error("basis ordering is invalid: {0}")]
    InvalidBasis(String),
    #[error("eigenvalue iteration did not converge ({found} of {size} eigenvalues found)")]
    NoConvergence {
        size: usize,
        found: usize,
        partial: Vec<C64>,
    },
    #[error("eigenpair residual {residual:e} exceeds certificate bound {bound:e}")]
    ResidualCertificate { residual: f64, bound: f64 },
    #[error("steady state is not unique (kernel dimension {0})")]
    DegenerateSteadyState(usize),
    #[error("matrix exponential overflowed (norm {0:e})")]
    ExpOverflow(f64),
    #[error("singular linear system")]
    Singular,
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerics on a valid model, as opposed to
    /// rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::ResidualCertificate { .. }
                | Error::DegenerateSteadyState(_)
                | Error::ExpOverflow(_)
                | Error::Singular
        )
    }
}
