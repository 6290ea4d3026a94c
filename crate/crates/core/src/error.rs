use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("all entries are zero; cannot normalize")]
    AllZero,
    #[error("negative mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("not a probability vector: {0}")]
    InvalidDist(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weights sum to {sum}, expected 1")]
    WeightSumError { sum: f64 },
    #[error("rho = {0} is outside (0, 1)")]
    RhoOutOfRange(f64),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("empty input list")]
    EmptyList,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("solver diverged: {0}")]
    SolverDiverged(String),
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("intersection of belief sets is empty (min max-excess {min_excess:.3e})")]
    EmptyIntersection { min_excess: f64 },
    #[error("supremum over psi not interior after bracket expansion")]
    BracketFailure,
    #[error("unknown act '{0}'")]
    UnknownAct(String),
    #[error("unknown outcome '{0}'")]
    UnknownOutcome(String),
    #[error("reference model is not absolutely continuous with respect to the feasible set")]
    AbsoluteContinuityFailure,
    #[error("candidates {0} and {1} are not ordered by first-order stochastic dominance")]
    NoFosdOrder(usize, usize),
    #[error("objective has several interior local maxima on the pre-scan")]
    NonConcaveDetected,
    #[error("no root: bracket endpoints share a sign after expansion")]
    NoRoot,
    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),
    #[error("target {target} is outside the open range ({min}, {max})")]
    TargetOutOfRange { target: f64, min: f64, max: f64 },
    #[error("James-Stein preset needs at least 3 advisor signals, got {0}")]
    TooFewSignals(usize),
    #[error("degenerate instance: {0}")]
    Degenerate(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
