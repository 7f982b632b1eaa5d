use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not antisymmetric (|M + M^T|_F = {0:e})")]
    NotAntisymmetric(f64),

    #[error("cannot project onto the orthogonal complement of a zero vector")]
    ZeroVector,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("nodes {0} and {1} coincide")]
    CoincidentNodes(usize, usize),

    #[error("degenerate framework ({0})")]
    DegenerateConfiguration(String),

    #[error("velocities violate the rigid-grasp constraint (residual {0:e})")]
    ConstraintViolation(f64),

    #[error("inertia matrix is not symmetric positive definite")]
    SingularInertia,

    #[error("grasp matrix does not have full row rank")]
    RankDeficientGrasp,

    #[error("{0} is not symmetric positive definite")]
    NonSpd(&'static str),

    #[error("G * G* deviates from the identity by {0:e}")]
    NotARightInverse(f64),

    #[error("row transform is singular or badly shaped")]
    SingularScaling,

    #[error("object orientation is antipodal to the reference (e_O = {0})")]
    AntipodalOrientation(f64),

    #[error("desired internal force is not in null(G) (|G h| = {0:e})")]
    DesiredInternalForceNotInternal(f64),

    #[error("Euler-rate map is singular at pitch {0} rad")]
    EulerRateSingularity(f64),

    #[error("invalid rotation matrix: {0}")]
    InvalidRotation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
