//! Closed-form Schur decomposition of symmetric 2x2 matrices.
//!
//! The updating algorithm rewrites each side of a rank-one matrix update as a
//! pair of symmetric rank-one corrections. The weights and directions of that
//! pair come from the eigendecomposition of a tiny symmetric matrix such as
//! [[beta, 1], [1, 0]], so this routine sits on the critical path of every
//! update and has to be exact and branch-predictable.

use crate::error::{Error, Result};

/// Eigendecomposition M = Q diag(rho1, rho2) Q^T of a symmetric 2x2 matrix.
///
/// `q` is orthogonal with column `i` the eigenvector of `rho_i`, and the
/// eigenvalues are ordered `rho1 >= rho2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schur2x2 {
    pub rho1: f64,
    pub rho2: f64,
    /// Row-major orthogonal 2x2 factor: [[q00, q01], [q10, q11]].
    pub q: [[f64; 2]; 2],
}

impl Schur2x2 {
    /// Applies Q^T M Q and returns the result, for testing reconstruction.
    pub fn reconstruct(&self) -> [[f64; 2]; 2] {
        let q = &self.q;
        let d = [self.rho1, self.rho2];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = d[0] * q[i][0] * q[j][0] + d[1] * q[i][1] * q[j][1];
            }
        }
        out
    }
}

/// Flips `v` so its largest-magnitude component is positive. Ties resolve to
/// the first component, which keeps the output deterministic.
fn sign_fix(v: &mut [f64; 2]) {
    let lead = if v[0].abs() >= v[1].abs() { v[0] } else { v[1] };
    if lead < 0.0 {
        v[0] = -v[0];
        v[1] = -v[1];
    }
}

/// Exact eigendecomposition of a symmetric 2x2 matrix.
///
/// Uses the trace/determinant closed form with a hypot-style discriminant and
/// computes the small eigenvalue as det / rho1 when possible, which avoids
/// the cancellation of the naive quadratic formula. The second eigenvector is
/// constructed as the exact perpendicular of the first, so `q` is orthogonal
/// to machine precision by construction.
///
/// Errors: [`Error::NonFinite`] for NaN/inf entries, [`Error::NonSymmetric`]
/// when |m01 - m10| > 1e-14 * max|m_ij|.
pub fn schur_sym_2x2(m: [[f64; 2]; 2]) -> Result<Schur2x2> {
    let flat = [m[0][0], m[0][1], m[1][0], m[1][1]];
    if !flat.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = flat.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    if (m[0][1] - m[1][0]).abs() > 1e-14 * scale {
        return Err(Error::NonSymmetric);
    }

    let a = m[0][0];
    let c = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);

    let tr = a + c;
    let det = a * c - b * b;
    let disc = f64::hypot(a - c, 2.0 * b);
    // Large-magnitude root first, then the small one via the product of roots.
    let big = 0.5 * (tr + if tr >= 0.0 { disc } else { -disc });
    let small = if big != 0.0 { det / big } else { 0.0 };
    let (rho1, rho2) = if big >= small { (big, small) } else { (small, big) };

    // Eigenvector for rho1: (M - rho1 I) v = 0 has two candidate null-vector
    // formulas; pick whichever carries more signal.
    let cand1 = [b, rho1 - a];
    let cand2 = [rho1 - c, b];
    let n1 = cand1[0] * cand1[0] + cand1[1] * cand1[1];
    let n2 = cand2[0] * cand2[0] + cand2[1] * cand2[1];
    let (mut v1, norm2) = if n1 >= n2 { (cand1, n1) } else { (cand2, n2) };

    let q = if norm2 > 0.0 {
        let inv = norm2.sqrt().recip();
        v1[0] *= inv;
        v1[1] *= inv;
        sign_fix(&mut v1);
        let mut v2 = [-v1[1], v1[0]];
        sign_fix(&mut v2);
        [[v1[0], v2[0]], [v1[1], v2[1]]]
    } else {
        // b = 0 and a = c: the matrix is a multiple of the identity.
        [[1.0, 0.0], [0.0, 1.0]]
    };

    Ok(Schur2x2 { rho1, rho2, q })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(x: [[f64; 2]; 2], y: [[f64; 2]; 2]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((x[i][j] - y[i][j]).abs());
            }
        }
        worst
    }

    fn orth_defect(q: [[f64; 2]; 2]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let dot = q[0][i] * q[0][j] + q[1][i] * q[1][j];
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    #[test]
    fn exchange_matrix() {
        // [[0,1],[1,0]] has eigenpairs (+1, (1,1)/sqrt2) and (-1, (1,-1)/sqrt2).
        let s = schur_sym_2x2([[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let r = 0.5f64.sqrt();
        assert!((s.rho1 - 1.0).abs() < 1e-15);
        assert!((s.rho2 + 1.0).abs() < 1e-15);
        let expect = [[r, r], [r, -r]];
        assert!(max_abs_diff(s.q, expect) < 1e-15);
    }

    #[test]
    fn weight_matrix_with_positive_corner() {
        // [[2,1],[1,0]]: eigenvalues 1 +- sqrt(2).
        let s = schur_sym_2x2([[2.0, 1.0], [1.0, 0.0]]).unwrap();
        let rt2 = 2.0f64.sqrt();
        assert!((s.rho1 - (1.0 + rt2)).abs() < 1e-15);
        assert!((s.rho2 - (1.0 - rt2)).abs() < 1e-15);
        assert!(s.rho1 > 0.0 && s.rho2 < 0.0);
    }

    #[test]
    fn diagonal_input_orders_eigenvalues() {
        let s = schur_sym_2x2([[3.0, 0.0], [0.0, 7.0]]).unwrap();
        assert_eq!((s.rho1, s.rho2), (7.0, 3.0));
        // Column 1 must be the eigenvector of 7, i.e. e2.
        assert_eq!(s.q, [[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn multiple_of_identity() {
        let s = schur_sym_2x2([[4.0, 0.0], [0.0, 4.0]]).unwrap();
        assert_eq!((s.rho1, s.rho2), (4.0, 4.0));
        assert_eq!(s.q, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn rejects_asymmetry_and_nonfinite() {
        assert_eq!(
            schur_sym_2x2([[1.0, 2.0], [1.0, 1.0]]).unwrap_err(),
            Error::NonSymmetric
        );
        assert_eq!(
            schur_sym_2x2([[f64::INFINITY, 0.0], [0.0, 1.0]]).unwrap_err(),
            Error::NonFinite
        );
    }

    #[test]
    fn random_spins_reconstruct_and_stay_orthogonal() {
        // Deterministic LCG; covers magnitudes from 1e-6 to 1e6.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            // Map the top bits to [-1, 1).
            (state >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
        };
        for trial in 0..10_000 {
            let scale = 10f64.powi((trial % 13) as i32 - 6);
            let a = next() * scale;
            let b = next() * scale;
            let c = next() * scale;
            let m = [[a, b], [b, c]];
            let s = schur_sym_2x2(m).unwrap();
            let spread = a.abs().max(b.abs()).max(c.abs());
            assert!(
                max_abs_diff(s.reconstruct(), m) <= 1e-13 * (1.0 + spread),
                "reconstruction failed for {m:?}"
            );
            assert!(orth_defect(s.q) <= 1e-14, "orthogonality failed for {m:?}");
            assert!(s.rho1 >= s.rho2);
        }
    }
}
