//! Dense Jacobi eigensolver and SVD.
//!
//! These are deliberately plain O(n^3)-per-sweep routines. They serve two
//! roles: producing the initial factorization that the updating algorithm
//! then maintains, and acting as an independent cross-check for the secular
//! path in tests and in the verification command. Neither routine shares any
//! code with the secular machinery.

use crate::error::{Error, Result};
use crate::matrix::{check_finite, DenseMatrix, DiagRect};

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a symmetric matrix by cyclic two-sided Jacobi.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvector columns. Symmetry is checked relative to the largest entry.
pub fn jacobi_eigh(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::DimensionMismatch("jacobi_eigh requires a square matrix"));
    }
    check_finite(m.as_slice())?;
    let scale = m.max_abs();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.get(i, j) - m.get(j, i)).abs() > 1e-12 * scale.max(1.0) {
                return Err(Error::NonSymmetric);
            }
        }
    }

    let mut b = m.clone();
    // Symmetrize exactly so the rotations keep the matrix symmetric.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (b.get(i, j) + b.get(j, i));
            b.set(i, j, avg);
            b.set(j, i, avg);
        }
    }
    let mut q = DenseMatrix::identity(n);
    let off_tol = 1e-15 * scale.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for r in (p + 1)..n {
                let bpr = b.get(p, r);
                if bpr.abs() <= off_tol {
                    continue;
                }
                rotated = true;
                let tau = (b.get(r, r) - b.get(p, p)) / (2.0 * bpr);
                let t = if tau >= 0.0 {
                    1.0 / (tau + f64::hypot(1.0, tau))
                } else {
                    -1.0 / (-tau + f64::hypot(1.0, tau))
                };
                let c = 1.0 / f64::hypot(1.0, t);
                let s = t * c;

                // B <- G^T B G on the (p, r) plane.
                for k in 0..n {
                    let bkp = b.get(k, p);
                    let bkr = b.get(k, r);
                    b.set(k, p, c * bkp - s * bkr);
                    b.set(k, r, s * bkp + c * bkr);
                }
                for k in 0..n {
                    let bpk = b.get(p, k);
                    let brk = b.get(r, k);
                    b.set(p, k, c * bpk - s * brk);
                    b.set(r, k, s * bpk + c * brk);
                }
                for k in 0..n {
                    let qkp = q.get(k, p);
                    let qkr = q.get(k, r);
                    q.set(k, p, c * qkp - s * qkr);
                    q.set(k, r, s * qkp + c * qkr);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| b.get(a, a).total_cmp(&b.get(c, c)));
    let vals: Vec<f64> = order.iter().map(|&i| b.get(i, i)).collect();
    let vecs = DenseMatrix::from_fn(n, n, |i, j| q.get(i, order[j]));
    Ok((vals, vecs))
}

/// Full SVD `A = U S V^T` by one-sided Jacobi on the tall orientation.
///
/// `U` is `rows x rows`, `S` is `rows x cols` with nonincreasing diagonal,
/// `V` is `cols x cols`. Works for any shape; rank-deficient input gets its
/// null-space columns completed deterministically from the standard basis.
pub fn jacobi_svd(a: &DenseMatrix) -> Result<(DenseMatrix, DiagRect, DenseMatrix)> {
    check_finite(a.as_slice())?;
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::DimensionMismatch("jacobi_svd requires nonempty input"));
    }
    if a.rows() >= a.cols() {
        let (u, s, v) = one_sided_tall(a)?;
        let diag = DiagRect::new(a.rows(), a.cols(), s)?;
        Ok((u, diag, v))
    } else {
        // A = U S V^T  <=>  A^T = V S^T U^T.
        let (v, s, u) = one_sided_tall(&a.transpose())?;
        let diag = DiagRect::new(a.rows(), a.cols(), s)?;
        Ok((u, diag, v))
    }
}

/// One-sided Jacobi for rows >= cols. Returns (U rows x rows, sigma of
/// length cols sorted descending, V cols x cols).
fn one_sided_tall(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let rows = a.rows();
    let cols = a.cols();
    let mut b = a.clone();
    let mut v = DenseMatrix::identity(cols);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for r in (p + 1)..cols {
                let mut app = 0.0;
                let mut arr = 0.0;
                let mut apr = 0.0;
                for i in 0..rows {
                    let x = b.get(i, p);
                    let y = b.get(i, r);
                    app += x * x;
                    arr += y * y;
                    apr += x * y;
                }
                if apr.abs() <= 1e-15 * (app * arr).sqrt() || apr == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (arr - app) / (2.0 * apr);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + f64::hypot(1.0, zeta))
                } else {
                    -1.0 / (-zeta + f64::hypot(1.0, zeta))
                };
                let c = 1.0 / f64::hypot(1.0, t);
                let s = t * c;
                for i in 0..rows {
                    let x = b.get(i, p);
                    let y = b.get(i, r);
                    b.set(i, p, c * x - s * y);
                    b.set(i, r, s * x + c * y);
                }
                for i in 0..cols {
                    let x = v.get(i, p);
                    let y = v.get(i, r);
                    v.set(i, p, c * x - s * y);
                    v.set(i, r, s * x + c * y);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort them descending.
    let mut sigma: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| b.get(i, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));
    sigma = order.iter().map(|&j| sigma[j]).collect();
    let v_sorted = DenseMatrix::from_fn(cols, cols, |i, j| v.get(i, order[j]));

    // Left vectors: normalized nonzero columns, then a completed basis.
    let sig_tol = sigma.first().copied().unwrap_or(0.0) * 1e-14;
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for (k, &j) in order.iter().enumerate() {
        if sigma[k] > sig_tol && sigma[k] > 0.0 {
            let inv = sigma[k].recip();
            u_cols.push((0..rows).map(|i| b.get(i, j) * inv).collect());
        }
    }
    complete_basis(&mut u_cols, rows);
    let u = DenseMatrix::from_fn(rows, rows, |i, j| u_cols[j][i]);
    Ok((u, sigma, v_sorted))
}

/// Extends a set of orthonormal columns to a full orthonormal basis of R^dim
/// by Gram-Schmidt against the standard basis, re-orthogonalizing once.
fn complete_basis(cols: &mut Vec<Vec<f64>>, dim: usize) {
    let mut cand = 0;
    while cols.len() < dim && cand < dim {
        let mut w = vec![0.0; dim];
        w[cand] = 1.0;
        for _ in 0..2 {
            for c in cols.iter() {
                let dot: f64 = c.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (wi, ci) in w.iter_mut().zip(c) {
                    *wi -= dot * ci;
                }
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for wi in w.iter_mut() {
                *wi /= norm;
            }
            cols.push(w);
        }
        cand += 1;
    }
    debug_assert_eq!(cols.len(), dim);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::orthogonality_defect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_known_2x2() {
        let m = DenseMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let (vals, vecs) = jacobi_eigh(&m).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        assert!(orthogonality_defect(&vecs) < 1e-14);
    }

    #[test]
    fn eigh_reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[1usize, 2, 5, 16, 33] {
            let mut m = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let x = rng.random_range(-3.0..3.0);
                    m.set(i, j, x);
                    m.set(j, i, x);
                }
            }
            let (vals, q) = jacobi_eigh(&m).unwrap();
            assert!(orthogonality_defect(&q) < 1e-13);
            // Q diag(vals) Q^T == M.
            let mut qd = q.clone();
            qd.scale_cols(&vals);
            let rec = qd.matmul_trb(&q).unwrap();
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((rec.get(i, j) - m.get(i, j)).abs());
                }
            }
            assert!(worst < 1e-12 * (1.0 + m.max_abs()), "n={n} worst={worst:e}");
            for w in vals.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn svd_reconstructs_all_orientations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(m, n) in &[(4usize, 4usize), (6, 3), (3, 6), (1, 5), (5, 1), (8, 8)] {
            let a = DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
            let (u, s, v) = jacobi_svd(&a).unwrap();
            assert!(orthogonality_defect(&u) < 1e-13);
            assert!(orthogonality_defect(&v) < 1e-13);
            for w in s.diag().windows(2) {
                assert!(w[0] >= w[1]);
            }
            let usv = u.matmul(&s.to_dense()).unwrap().matmul_trb(&v).unwrap();
            let mut worst = 0.0f64;
            for i in 0..m {
                for j in 0..n {
                    worst = worst.max((usv.get(i, j) - a.get(i, j)).abs());
                }
            }
            assert!(worst < 1e-12 * (1.0 + a.max_abs()), "{m}x{n} worst={worst:e}");
        }
    }

    #[test]
    fn svd_handles_rank_deficiency() {
        // Rank-1 matrix: outer product of ones.
        let a = DenseMatrix::from_fn(4, 3, |_, _| 1.0);
        let (u, s, v) = jacobi_svd(&a).unwrap();
        assert!((s.diag()[0] - (12.0f64).sqrt()).abs() < 1e-12);
        assert!(s.diag()[1].abs() < 1e-12);
        assert!(orthogonality_defect(&u) < 1e-12);
        assert!(orthogonality_defect(&v) < 1e-12);
    }
}
