use thiserror::Error;

/// Errors raised by mesh construction, assembly and the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh geometry: {0}")]
    InvalidGeometry(String),
    #[error("unsupported quadrature order {0}")]
    UnsupportedOrder(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("order field value {value} at ({x}, {y}) lies outside [{lo}, {hi}]")]
    OrderOutOfBounds { value: f64, x: f64, y: f64, lo: f64, hi: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("elements {0} and {1} do not form the requested pair type")]
    PairMismatch(usize, usize),
    #[error("meshes are not related by one uniform refinement")]
    IncompatibleMeshes,
    #[error("CG breakdown at iteration {iteration}: non-positive curvature {curvature:e}")]
    Breakdown { iteration: usize, curvature: f64 },
    #[error("CG did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
