use thiserror::Error;

/// Failure kinds shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid depth: {0}")]
    InvalidDepth(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("weight prefix exhausted: {0}")]
    PrefixExhausted(String),
    #[error("spline has too many pieces: {0}")]
    PieceLimit(String),
    #[error("invalid Gevrey order: {0}")]
    InvalidOrder(String),
    #[error("order mismatch: {0}")]
    OrderMismatch(String),
    #[error("loss too small: {0}")]
    LossTooSmall(String),
    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),
    #[error("insufficient radius: {0}")]
    InsufficientRadius(String),
    #[error("invalid loss radius: {0}")]
    InvalidLoss(String),
    #[error("condition on the negative axis violated: {0}")]
    ConditionViolated(String),
    #[error("invalid cut: {0}")]
    InvalidCut(String),
    #[error("divergent series: {0}")]
    DivergentSeries(String),
    #[error("invalid boundary condition: {0}")]
    InvalidBc(String),
    #[error("contour suspect: {0}")]
    ContourSuspect(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
