use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("chart singular: |Λ| = {0:e}")]
    ChartSingular(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("configuration on a gauge horizon: det 𝔔 = {0:e}")]
    Horizon(f64),
    #[error("seed vectors are not independent (rank deficiency at vector {0})")]
    RankDeficient(usize),
    #[error("equilibrium is not in principal axes: off-diagonal second moment {0:e}")]
    PrincipalAxes(f64),
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("configuration violates the gauge: residual {0:e}")]
    InconsistentConfiguration(f64),
    #[error("matrix is not Hermitian: deviation {0:e}")]
    NonHermitian(f64),
    #[error("ambiguous degeneracy grouping near E = {0}")]
    AmbiguousDegeneracy(f64),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("coordinate lists differ: {0} vs {1}")]
    CoordinateMismatch(usize, usize),
    #[error("quadrature too coarse: order {order} for degree {degree}")]
    Accuracy { order: usize, degree: usize },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
