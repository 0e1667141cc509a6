use thiserror::Error;

use crate::profiles::ProfileError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("conformal factor vanishes at {at:?} (phi = {value:e})")]
    ZeroConformalFactor { at: Vec<f64>, value: f64 },
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {0} not supported (need n >= 3)")]
    InvalidDimension(usize),
    #[error("translation direction has zero length")]
    DegenerateDirection,
    #[error("{what} vanishes at {at}")]
    VanishingDerivative { what: &'static str, at: f64 },
    #[error("c1 = 0 makes the transformed potential constant")]
    DegenerateTransform,
    #[error("adaptive quadrature did not converge on [{lo}, {hi}]")]
    QuadratureNonConvergence { lo: f64, hi: f64 },
    #[error("{t} outside the working interval [{lo}, {hi}]")]
    OutsideWorkingInterval { t: f64, lo: f64, hi: f64 },
    #[error("chart exhausted: geodesic radius {wanted} not reached (max {reached})")]
    ChartExhausted { reached: f64, wanted: f64 },
    #[error("conformal factor changes sign on the ray near t = {t}")]
    PhiZeroCrossing { t: f64 },
    #[error("finite-difference step underflow at {0:?}")]
    StepUnderflow(Vec<f64>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{0}")]
    Inconsistent(String),
}
