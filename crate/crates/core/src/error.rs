use thiserror::Error;

/// Errors raised by the history calculus.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("tensor dimension overflow: {requested} exceeds the limit {limit}")]
    TensorDimensionOverflow { requested: usize, limit: usize },
    #[error("not hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("eig failure: no convergence after {sweeps} sweeps")]
    EigFailure { sweeps: usize },
    #[error("not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("not an effect: {0}")]
    NotAnEffect(String),
    #[error("not a density operator: {0}")]
    NotADensity(String),
    #[error("times not strictly increasing")]
    TimesNotIncreasing,
    #[error("support not superset")]
    SupportNotSuperset,
    #[error("oplus undefined (largest eigenvalue of the sum {max_eigenvalue})")]
    OplusUndefined { max_eigenvalue: f64 },
    #[error("ominus undefined (not below)")]
    OminusUndefined,
    #[error("temporal overlap")]
    TemporalOverlap,
    #[error("arity mismatch: expected {expected} times, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("mixed history kinds")]
    MixedHistoryKinds,
    #[error("atoms not summable (largest eigenvalue of the sum {max_eigenvalue})")]
    AtomsNotSummable { max_eigenvalue: f64 },
    #[error("valuation not injective: elements {0} and {1} share an image")]
    ValuationNotInjective(u64, u64),
    #[error("valuation condition violated (residual {residual:e})")]
    ValuationConditionViolated { residual: f64 },
    #[error("lattice has no atoms")]
    EmptyLattice,
    #[error("too many atoms: {found} (limit {limit})")]
    TooManyAtoms { found: usize, limit: usize },
    #[error("element {0:#b} is not in the lattice")]
    UnknownElement(u64),
    #[error("degenerate normalization: d(M1, M1) = {0:e}")]
    DegenerateNormalization(f64),
    #[error("inconsistent lattice (worst |Re d| = {worst_value:e})")]
    InconsistentLattice { worst_value: f64 },
    #[error("conditional undefined: p(e1) = {0:e}")]
    ConditionalUndefined(f64),
    #[error("e3 not a common lower bound")]
    NotCommonLowerBound,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
