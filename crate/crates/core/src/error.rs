use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),

    #[error("coarse node {0} lies on the boundary and cannot center a basis function")]
    BoundaryCenter(usize),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("coefficient must be positive, found {value} at ({x}, {y})")]
    NonPositiveCoefficient { value: f64, x: f64, y: f64 },

    #[error("raster {path}: {reason}")]
    Raster { path: PathBuf, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("measurement {0} has no support on the free degrees of freedom")]
    EmptyMeasurement(usize),

    #[error("measurements are rank deficient; measurement {measurement} cannot be satisfied (residual {residual:e})")]
    RankDeficient { measurement: usize, residual: f64 },

    #[error("patch around entity {center} has no interior degrees of freedom")]
    EmptyPatch { center: usize },

    #[error("local constraints infeasible in patch {center}: {reason}")]
    InfeasiblePatch { center: usize, reason: String },

    #[error("zero reference norm")]
    ZeroReference,

    #[error("empty control space")]
    EmptyControlSpace,

    #[error("control spaces are not nested: {0}")]
    NotNested(String),

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
