use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("operator is not positive definite (smallest eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("decomposition does not span the algebra (dimension {found} of {expected})")]
    NotSpanning { expected: usize, found: usize },

    #[error("subspaces are not mutually orthogonal (overlap {0:.3e})")]
    NotOrthogonal(f64),

    #[error("operator does not preserve the subspace (off-block norm {0:.3e})")]
    NotPreserved(f64),

    #[error("constraint Gram matrix is numerically singular")]
    SingularGram,

    #[error("element is not regular: centralizer has dimension {centralizer}, expected {expected}")]
    NotRegular { centralizer: usize, expected: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("constraint residual {residual:.3e} exceeds tolerance at t = {t}")]
    ConstraintRejected { t: f64, residual: f64 },

    #[error("group drift {drift:.3e} before projection at t = {t}")]
    GroupDrift { t: f64, drift: f64 },

    #[error("compactness inequality violated (margin {0:.6e})")]
    CompactnessViolated(f64),

    #[error("invariant torus degenerates: {0}")]
    DegenerateTorus(String),
}
