use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("field lives on mesh {found} but mesh {expected} was given")]
    MeshMismatch { expected: u64, found: u64 },

    #[error("point {0} lies outside the closed domain")]
    OutsideDomain(crate::mesh::Point2),

    #[error("no quadrature rule of degree {0} (supported: 0..={max})", max = crate::fem::quadrature::MAX_DEGREE)]
    UnsupportedDegree(usize),

    #[error("weight exponent {0} outside the admissible range (0, 2)")]
    AlphaOutOfRange(f64),

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("matrix is numerically singular at row {row}")]
    Singular { row: usize },

    #[error("linear solve residual {residual:e} exceeds bound {bound:e}")]
    InaccurateSolve { residual: f64, bound: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("{0}")]
    Records(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
