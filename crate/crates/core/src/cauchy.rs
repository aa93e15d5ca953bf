//! The Cauchy structure of the eigenvector update.
//!
//! After the secular equation produces the new eigenvalues mu, the updated
//! eigenvectors are U * C-tilde where
//!
//! ```text
//! C-tilde = diag(abar_i) * C * diag(|c_i|)^-1,   C = [1 / (lambda_i - mu_j)]
//! ```
//!
//! and |c_i| is the Euclidean norm of column i of diag(abar) * C, which makes
//! every output column a unit vector. The product U * diag(abar) * C is n
//! independent row-vector x Cauchy-matrix products (Trummer's problem); the
//! [`Backend`] choice decides how those row products are evaluated. The naive
//! double loop here is the ground-truth oracle for both fast backends.

use crate::error::{Error, Result};
use crate::matrix::{check_finite, DenseMatrix};
use rayon::prelude::*;

/// Which Trummer's-problem implementation carries the row products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Direct double-loop summation, O(n^2) per row. Exact reference.
    Naive,
    /// Polynomial product-tree evaluation; supported for n <= 512.
    Fast,
    /// One-dimensional fast multipole evaluation; `epsilon` in (0, 1) sets
    /// the far-field truncation error (expansion order p = ceil(log5(1/eps))).
    Fmm { epsilon: f64 },
}

/// Default far-field accuracy: 5^-20, i.e. expansion order p = 20.
pub const DEFAULT_EPSILON: f64 = 1.0 / 95_367_431_640_625.0;

impl Backend {
    /// The fmm backend at its default accuracy.
    pub fn fmm_default() -> Self {
        Backend::Fmm { epsilon: DEFAULT_EPSILON }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Naive => "naive",
            Backend::Fast => "fast",
            Backend::Fmm { .. } => "fmm",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Backend::Fmm { epsilon } = self {
            if !(epsilon.is_finite() && *epsilon > 0.0 && *epsilon < 1.0) {
                return Err(Error::InvalidEpsilon(*epsilon));
            }
        }
        Ok(())
    }
}

/// True when x and y are farther apart than the machine spacing at their
/// magnitude, i.e. the kernel 1/(x - y) is representable.
#[inline]
pub(crate) fn separated(x: f64, y: f64) -> bool {
    let tol = (f64::EPSILON * x.abs().max(y.abs())).max(f64::MIN_POSITIVE);
    (x - y).abs() >= tol
}

/// Checks every pole/node pair for coincidence in O((n+m) log(n+m)) by
/// sorting; reports the first collision with original indices.
pub(crate) fn check_collisions(lambda: &[f64], mu: &[f64]) -> Result<()> {
    let mut events: Vec<(f64, bool, usize)> = Vec::with_capacity(lambda.len() + mu.len());
    events.extend(lambda.iter().enumerate().map(|(i, &x)| (x, true, i)));
    events.extend(mu.iter().enumerate().map(|(i, &y)| (y, false, i)));
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    // A colliding pair must be adjacent in sorted order, possibly through a
    // run of equal values; comparing each element against the nearest from
    // the other family on its left covers all pairs.
    let mut last_lambda: Option<(f64, usize)> = None;
    let mut last_mu: Option<(f64, usize)> = None;
    for &(x, is_lambda, idx) in &events {
        if is_lambda {
            if let Some((y, j)) = last_mu {
                if !separated(x, y) {
                    return Err(Error::PoleCollision { source: idx, target: j });
                }
            }
            last_lambda = Some((x, idx));
        } else {
            if let Some((y, j)) = last_lambda {
                if !separated(y, x) {
                    return Err(Error::PoleCollision { source: j, target: idx });
                }
            }
            last_mu = Some((x, idx));
        }
    }
    Ok(())
}

/// Materializes C with C[i][j] = 1/(lambda_i - mu_j). Test and oracle use
/// only; production paths never form C.
pub fn build_cauchy(lambda: &[f64], mu: &[f64]) -> Result<DenseMatrix> {
    check_finite(lambda)?;
    check_finite(mu)?;
    check_collisions(lambda, mu)?;
    Ok(DenseMatrix::from_fn(lambda.len(), mu.len(), |i, j| {
        1.0 / (lambda[i] - mu[j])
    }))
}

/// Direct evaluation of out[i] = sum_j u[j] / (lambda[j] - mu[i]).
///
/// O(n*m) double loop with a fixed summation order; this is the oracle that
/// the fast and fmm backends are verified against.
pub fn cauchy_matvec_naive(lambda: &[f64], mu: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != lambda.len() {
        return Err(Error::DimensionMismatch("charge vector vs poles length"));
    }
    check_finite(lambda)?;
    check_finite(mu)?;
    check_finite(u)?;
    check_collisions(lambda, mu)?;
    let out = mu
        .iter()
        .map(|&m| {
            let mut acc = 0.0;
            for (&l, &c) in lambda.iter().zip(u) {
                acc += c / (l - m);
            }
            acc
        })
        .collect();
    Ok(out)
}

/// Euclidean norms of the columns of diag(abar) * C:
/// out[i] = sqrt(sum_j abar[j]^2 / (lambda[j] - mu[i])^2), direct O(n^2).
pub fn column_norms(abar: &[f64], lambda: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
    if abar.len() != lambda.len() {
        return Err(Error::DimensionMismatch("scaling vector vs poles length"));
    }
    check_finite(abar)?;
    check_finite(lambda)?;
    check_finite(mu)?;
    check_collisions(lambda, mu)?;
    let mut out = Vec::with_capacity(mu.len());
    for (i, &m) in mu.iter().enumerate() {
        let mut acc = 0.0;
        for (&l, &a) in lambda.iter().zip(abar) {
            let t = a / (l - m);
            acc += t * t;
        }
        let norm = acc.sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroColumn { column: i });
        }
        out.push(norm);
    }
    Ok(out)
}

/// One eigenvector-update system: poles (old eigenvalues), nodes (new
/// eigenvalues), the projected update weights, and the normalizing column
/// norms of diag(abar) * C.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchySystem {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub abar: Vec<f64>,
    pub col_norms: Vec<f64>,
}

impl CauchySystem {
    /// Validates separation and precomputes the column norms (O(n^2)).
    pub fn new(lambda: Vec<f64>, mu: Vec<f64>, abar: Vec<f64>) -> Result<Self> {
        if lambda.len() != mu.len() || lambda.len() != abar.len() {
            return Err(Error::DimensionMismatch("cauchy system vector lengths"));
        }
        let col_norms = column_norms(&abar, &lambda, &mu)?;
        Ok(Self { lambda, mu, abar, col_norms })
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

/// Applies the normalized Cauchy update to the columns spanned by `u`:
/// returns (u * diag(abar) * C) * diag(col_norms)^-1.
///
/// `u` must have one column per system entry; any row count is allowed. Row
/// products run through the chosen backend (one fmm plan is shared across
/// rows) and may execute in parallel; each row lands in its own output slot,
/// so the result is identical for any thread count. Output columns are
/// sign-normalized: the largest-magnitude entry of each column is made
/// positive (first occurrence wins ties).
pub fn apply_ctilde(sys: &CauchySystem, u: &DenseMatrix, backend: Backend) -> Result<DenseMatrix> {
    backend.validate()?;
    let k = sys.len();
    if u.cols() != k {
        return Err(Error::DimensionMismatch("matrix columns vs system size"));
    }
    if k == 0 {
        return Ok(DenseMatrix::zeros(u.rows(), 0));
    }

    // Plan/context shared by all rows for the fmm backend.
    let fmm_plan = match backend {
        Backend::Fmm { epsilon } => Some(crate::fmm::build_plan(&sys.lambda, &sys.mu, epsilon)?),
        _ => None,
    };
    if matches!(backend, Backend::Fast) && k > crate::fast::MAX_FAST_SIZE {
        return Err(Error::UnsupportedSize { size: k, max: crate::fast::MAX_FAST_SIZE });
    }

    let rows: Vec<Vec<f64>> = (0..u.rows())
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let row = u.row(r);
            match backend {
                Backend::Naive => {
                    let charges: Vec<f64> =
                        row.iter().zip(&sys.abar).map(|(x, a)| x * a).collect();
                    cauchy_matvec_naive(&sys.lambda, &sys.mu, &charges)
                }
                Backend::Fast => {
                    let charges: Vec<f64> =
                        row.iter().zip(&sys.abar).map(|(x, a)| x * a).collect();
                    crate::fast::fast_matvec(&sys.lambda, &sys.mu, &charges)
                }
                Backend::Fmm { .. } => {
                    // The fmm kernel natively computes sum q/(y - x); negated
                    // charges give the sum q/(x - y) orientation used here.
                    let charges: Vec<f64> =
                        row.iter().zip(&sys.abar).map(|(x, a)| -(x * a)).collect();
                    crate::fmm::fmm_evaluate(fmm_plan.as_ref().unwrap(), &charges)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = DenseMatrix::zeros(u.rows(), k);
    for (r, vals) in rows.iter().enumerate() {
        for (i, &v) in vals.iter().enumerate() {
            out.set(r, i, v / sys.col_norms[i]);
        }
    }
    fix_column_signs(&mut out);
    Ok(out)
}

/// Flips each column so its largest-magnitude entry is positive.
pub(crate) fn fix_column_signs(m: &mut DenseMatrix) {
    for j in 0..m.cols() {
        let mut lead = 0.0f64;
        for i in 0..m.rows() {
            let v = m.get(i, j);
            if v.abs() > lead.abs() {
                lead = v;
            }
        }
        if lead < 0.0 {
            for i in 0..m.rows() {
                let v = m.get(i, j);
                m.set(i, j, -v);
            }
        }
    }
}
