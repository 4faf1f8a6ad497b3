use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library.
///
/// Every variant except [`Error::Parse`] is a domain error: the input was
/// well-formed but the requested operation does not apply to it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("zero vector has no primitive representative")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("points span an affine subspace of dimension {affine_dim} inside dimension {ambient_dim}")]
    Degenerate {
        ambient_dim: usize,
        affine_dim: usize,
        /// Basis of the linear part of the affine span, one row per vector.
        span: Vec<Vec<i64>>,
    },

    #[error("the origin is not in the strict interior of the polytope")]
    OriginNotInterior,

    #[error("polytope is not reflexive")]
    NotReflexive,

    #[error("polytope is not Fano")]
    NotFano,

    #[error("{0}")]
    Unsupported(String),

    #[error("matrix is not unimodular")]
    NotUnimodular,

    #[error("point {0:?} is not in the sublattice")]
    OutsideSublattice(Vec<i64>),

    #[error("sublattice has infinite index")]
    InfiniteIndex,

    #[error("polynomial is zero")]
    ZeroPolynomial,

    #[error("coefficient depends on parameters: {0}")]
    Parametric(String),

    #[error("product of two parameter-dependent coefficients is not affine")]
    NonAffine,

    #[error("missing value for parameter {0}")]
    MissingParameter(String),

    #[error("not mutable: slice at height {height} is not divisible by the factor power")]
    NotMutable { height: i64 },

    #[error("invalid mutation data: {0}")]
    InvalidMutationData(String),

    #[error("trivial mutation: factor is a monomial")]
    TrivialMutation,

    #[error("periods of different kinds cannot be compared")]
    PeriodKindMismatch,

    #[error("facets without an admissible Minkowski decomposition: {0:?}")]
    NoAdmissibleDecomposition(Vec<usize>),

    #[error("inconsistent coefficient at {point:?}: {first} vs {second}")]
    InconsistentAssembly {
        point: Vec<i64>,
        first: String,
        second: String,
    },

    #[error("inconsistent linear system: {0}")]
    Inconsistent(String),

    #[error("node is on the frontier and has not been expanded")]
    FrontierNode,

    #[error("not found: {0}")]
    NotFound(String),

    #[error("not rigid: {parameters} free parameters")]
    NotRigid { parameters: usize },
}

impl Error {
    pub(crate) fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: message.into(),
        }
    }

    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse { .. })
    }

    /// Short machine-readable reason tag, stable across releases.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::ZeroVector => "zero-vector",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::Degenerate { .. } => "degenerate",
            Error::OriginNotInterior => "origin-not-interior",
            Error::NotReflexive => "not-reflexive",
            Error::NotFano => "not-fano",
            Error::Unsupported(_) => "unsupported",
            Error::NotUnimodular => "not-unimodular",
            Error::OutsideSublattice(_) => "outside-sublattice",
            Error::InfiniteIndex => "infinite-index",
            Error::ZeroPolynomial => "zero-polynomial",
            Error::Parametric(_) => "parametric",
            Error::NonAffine => "non-affine",
            Error::MissingParameter(_) => "missing-parameter",
            Error::NotMutable { .. } => "not-mutable",
            Error::InvalidMutationData(_) => "invalid-mutation-data",
            Error::TrivialMutation => "trivial-mutation",
            Error::PeriodKindMismatch => "period-kind-mismatch",
            Error::NoAdmissibleDecomposition(_) => "no-admissible-decomposition",
            Error::InconsistentAssembly { .. } => "inconsistent-assembly",
            Error::Inconsistent(_) => "inconsistent",
            Error::FrontierNode => "frontier-node",
            Error::NotFound(_) => "not-found",
            Error::NotRigid { .. } => "not-rigid",
        }
    }
}
