use thiserror::Error;

use crate::compat::OrderWitness;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("eigensolver did not converge after {0} sweeps")]
    ConvergenceFailure(usize),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("function table has {got} values but the spectrum has {expected} eigenvalues")]
    UndefinedOnSpectrum { expected: usize, got: usize },

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("proposition has probability {0:e}, at or below the null threshold")]
    NullProposition(f64),

    #[error("outcome space of {size} entries exceeds the cap of {cap}")]
    SpaceCapExceeded { size: u128, cap: u128 },

    #[error("observables {0} and {1} are not compatible")]
    NotCompatible(String, String),

    #[error("scenario contains the incompatible pair ({}, {}), order gap {:.6}", .0.pair.0, .0.pair.1, .0.gap)]
    IncompatibleScenario(Box<OrderWitness>),

    #[error("scenario needs at least {0} observables")]
    ScenarioTooSmall(usize),

    #[error("unknown observable '{0}'")]
    UnknownObservable(String),

    #[error("unknown state '{0}'")]
    UnknownState(String),

    #[error("conditioning event has probability {0:e}, at or below the null threshold")]
    NullCondition(f64),

    #[error("measures live on spaces of different size ({0} vs {1})")]
    SpaceMismatch(usize, usize),

    #[error("axes of the shot record and the analytic table differ")]
    AxisMismatch,

    #[error("decompositions describe different density matrices (max difference {0:e})")]
    DecompositionMismatch(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("parse error: {0}")]
    Parse(String),
}
