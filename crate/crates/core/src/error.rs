use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of zero")]
    LogOfZero,
    #[error("quotients fail to converge at step {step} (valuation {valuation})")]
    NonConvergent { step: u32, valuation: i64 },
    #[error("discriminant bound exceeded: |D| = {0}")]
    BoundExceeded(i64),
    #[error("no self-dual character: {0}")]
    NoSelfDualCharacter(String),
    #[error("conductor meets p = {0}")]
    ConductorMeetsP(u64),
    #[error("hypothesis violated: {0}")]
    Hypothesis(#[from] HypothesisError),
    #[error("unsupported local type: {0}")]
    Unsupported(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("search bound exhausted: {0}")]
    SearchExhausted(String),
    #[error("empty support grid")]
    EmptyGrid,
    #[error("inconclusive probe: residual {0:e}")]
    Inconclusive(f64),
}

/// Gate failures that prevent a verification run from producing a verdict.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HypothesisError {
    #[error("p = {0} must be an odd prime")]
    BadPrime(u64),
    #[error("p = {p} does not split in K (d = {d})")]
    NotSplit { p: u64, d: u64 },
    #[error("p = {p} divides h_K = {h}")]
    DividesClassNumber { p: u64, h: u64 },
    #[error("p = {0} divides the order of U^alg")]
    DividesUnits(u64),
    #[error("global root number is +1")]
    RootNumberPlusOne,
    #[error("class number {0} != 1 is outside the supported range")]
    ClassNumberNotOne(u64),
    #[error("root number {formula} disagrees with functional-equation probe {probe}")]
    RootNumberMismatch { formula: i32, probe: i32 },
}
