use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument must be positive: {0}")]
    NonPositiveArgument(&'static str),

    #[error("argument out of domain: {0}")]
    DomainError(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("coincident points in kernel evaluation")]
    CoincidentPoints,

    #[error("quadrature target is not on the panel")]
    TargetNotOnPanel,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("mesh is not a closed surface: {0}")]
    OpenSurface(String),

    #[error("linear system is numerically singular")]
    SingularSystem,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("empty point set")]
    EmptyPointSet,

    #[error("evaluation point lies on or too close to the boundary")]
    PointOnBoundary,

    #[error("reference field vanishes on the evaluation set")]
    ZeroReference,

    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("basis parse error at line {line}: {msg}")]
    BasisParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
