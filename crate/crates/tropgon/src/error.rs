use thiserror::Error;

/// Errors across the crate. Variant names follow the operation contracts.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is disconnected")]
    DisconnectedGraph,
    #[error("unknown vertex: {0}")]
    UnknownVertex(String),
    #[error("unknown edge: {0}")]
    UnknownEdge(String),
    #[error("duplicate id: {0}")]
    DuplicateId(String),
    #[error("contracting the loop {0} would drop genus")]
    LoopContraction(String),
    #[error("genus zero: {0}")]
    GenusZero(String),
    #[error("genus too small: {0}")]
    GenusTooSmall(String),
    #[error("metric loop has no essential model")]
    MetricLoop,
    #[error("non-positive length on edge {0}")]
    NonPositiveLength(String),

    #[error("malformed partition at {0}: {1}")]
    MalformedPartition(String, String),
    #[error("invalid gluing datum: {0}")]
    InvalidDatum(String),
    #[error("morphism target is not a tree")]
    TargetNotTree,
    #[error("search space too large: {0}")]
    SearchSpaceTooLarge(String),
    #[error("inconsistent degree across fibres: {0}")]
    InconsistentDegree(String),

    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is singular")]
    Singular,

    #[error("contracting {0} drops the skeleton genus")]
    GenusDrops(String),
    #[error("limits are not isomorphic")]
    LimitsNotIsomorphic,
    #[error("merged vertex has invalid valency {0}")]
    InvalidMergedValency(usize),
    #[error("skeleton of the limit is not trivalent")]
    NonTrivalentSkeleton,
    #[error("no regrow case matched: {0}")]
    CaseDispatchFailure(String),
    #[error("limit could not have come from a full-rank datum: {0}")]
    InvalidLimit(String),
    #[error("balancing condition violated: sum = {0}")]
    BalancingViolation(String),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("perturbation failed after {0} retries")]
    PerturbationFailed(usize),
    #[error("step limit exceeded ({0} steps)")]
    StepLimitExceeded(usize),
    #[error("loop-and-bridge structure absent: {0}")]
    LollipopViolation(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("local classification failed at {0}")]
    Unclassifiable(String),

    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
