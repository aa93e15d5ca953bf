use core::fmt;

/// Errors shared by every module in this crate.
///
/// Numerical routines here never panic on bad data; they validate their
/// documented preconditions and report violations through this enum.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input contained NaN or an infinity.
    NonFinite,
    /// A matrix that must be symmetric was not (relative to its magnitude).
    NonSymmetric,
    /// Operand shapes are inconsistent. The payload names the offending operand.
    DimensionMismatch(&'static str),
    /// A diagonal factor carried a negative entry.
    NegativeDiagonal { index: usize, value: f64 },
    /// Evaluation point of the secular function coincides with pole `index`.
    PoleHit { index: usize },
    /// Node `source` and evaluation point `target` coincide to machine
    /// precision, so the kernel 1/(lambda - mu) is not representable.
    PoleCollision { source: usize, target: usize },
    /// Column `column` of the eigenvector-normalization system has zero norm.
    ZeroColumn { column: usize },
    /// Interpolation nodes must be pairwise distinct; `index` repeats one.
    DuplicateNode { index: usize },
    /// The root finder exhausted its iteration budget on one bracket.
    NoConvergence { index: usize, lo: f64, hi: f64 },
    /// Problem size exceeds what the chosen backend supports.
    UnsupportedSize { size: usize, max: usize },
    /// The far-field accuracy parameter must lie strictly inside (0, 1).
    InvalidEpsilon(f64),
    /// An interpolation grid needs at least one node.
    InvalidOrder(usize),
    /// The operation needs at least one data point.
    EmptyInput,
    /// The matrix is identically zero, so a relative error is undefined.
    ZeroMatrix,
    /// A documented precondition of the operation was violated.
    Precondition(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite => write!(f, "input contains NaN or infinity"),
            Error::NonSymmetric => write!(f, "matrix is not symmetric"),
            Error::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            Error::NegativeDiagonal { index, value } => {
                write!(f, "diagonal entry {index} is negative ({value:e})")
            }
            Error::PoleHit { index } => {
                write!(f, "evaluation point coincides with pole {index}")
            }
            Error::PoleCollision { source, target } => {
                write!(
                    f,
                    "node {source} and evaluation point {target} coincide to machine precision"
                )
            }
            Error::ZeroColumn { column } => {
                write!(f, "normalization column {column} has zero norm")
            }
            Error::DuplicateNode { index } => {
                write!(f, "interpolation node {index} duplicates an earlier node")
            }
            Error::NoConvergence { index, lo, hi } => {
                write!(
                    f,
                    "secular root {index} did not converge in bracket ({lo:e}, {hi:e})"
                )
            }
            Error::UnsupportedSize { size, max } => {
                write!(f, "problem size {size} exceeds backend limit {max}")
            }
            Error::InvalidEpsilon(eps) => {
                write!(f, "epsilon {eps:e} outside the open interval (0, 1)")
            }
            Error::InvalidOrder(p) => {
                write!(f, "interpolation order {p} must be at least 1")
            }
            Error::EmptyInput => write!(f, "operation needs at least one data point"),
            Error::ZeroMatrix => {
                write!(f, "matrix is identically zero; relative error undefined")
            }
            Error::Precondition(what) => write!(f, "precondition violated: {what}"),
        }
    }
}

impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
