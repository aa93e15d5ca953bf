//! Rank-one updating of the singular value decomposition.
//!
//! Given a factored matrix A = U S V^T and a rank-one perturbation a b^T,
//! this crate computes the factorization of A + a b^T by reducing each side
//! of the update to a pair of symmetric rank-one eigenvalue corrections,
//! solving the resulting secular equations, and assembling the corrected
//! singular vectors through a Cauchy-kernel matrix product. The Cauchy
//! product is the asymptotic bottleneck and comes in three interchangeable
//! implementations:
//!
//! * [`Backend::Naive`] - exact O(n^2) summation, the reference everything
//!   else is checked against;
//! * [`Backend::Fast`]  - polynomial evaluation of the same sum through the
//!   ratio of two interpolants; conditionally stable, trustworthy only at
//!   small sizes (roughly n <= 16; see [`fast`]) and capped at n <= 512;
//! * [`Backend::Fmm`]   - a one-dimensional fast multipole evaluation with a
//!   tunable accuracy parameter, O(n log(1/eps)); the production choice.
//!
//! The high-level entry point is [`update::update_svd`]; the layers beneath
//! it ([`schur`], [`secular`], [`cauchy`], [`fast`], [`fmm`]) are public
//! because each is independently useful and independently tested.

pub mod cauchy;
pub mod error;
pub mod fast;
pub mod fmm;
pub mod jacobi;
pub mod matrix;
pub mod schur;
pub mod secular;
pub mod update;

pub use cauchy::Backend;
pub use error::{Error, Result};
pub use matrix::{orthogonality_defect, DenseMatrix, DiagRect};
pub use update::{update_svd, SvdFactors, UpdateReport};
