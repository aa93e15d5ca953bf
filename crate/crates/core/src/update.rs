//! Rank-one SVD updating.
//!
//! Given A = U S V^T and vectors a, b, the update computes the SVD of
//! A + a b^T without touching A itself. Both Gram matrices change by a
//! symmetric rank-two term that splits into two rank-one pieces through a
//! 2x2 Schur decomposition:
//!
//! ```text
//! (A + ab^T)(A + ab^T)^T = U Du U^T + [a b~] [[beta, 1], [1, 0]] [a b~]^T
//! (A + ab^T)^T(A + ab^T) = V Dv V^T + [b a~] [[alpha, 1], [1, 0]] [b a~]^T
//! ```
//!
//! with b~ = A b, a~ = A^T a, beta = b^T b, alpha = a^T a. Four symmetric
//! rank-one eigenupdates (two per side) then produce the new factors; each
//! one runs deflation, the secular-equation solver, and a Cauchy-structured
//! eigenvector assembly whose row products go through the selected
//! [`Backend`]. New singular values are the square roots of the left-side
//! eigenvalues; the right side only cross-checks them. A final sign pass
//! aligns each right vector with its left partner, since the two sides are
//! updated independently and per-pair signs are otherwise arbitrary.

use crate::cauchy::{apply_ctilde, Backend, CauchySystem};
use crate::error::{Error, Result};
use crate::matrix::{check_finite, orthogonality_defect, DenseMatrix, DiagRect};
use crate::schur::schur_sym_2x2;
use crate::secular::{deflate, solve_secular, SecularProblem};
use std::time::Instant;

/// Denominator floor for [`UpdateReport::sigma_consistency`], as a fraction
/// of the largest squared singular value. Measured left/right absolute gaps
/// on random updates sit near 5e-14 of the top (800 trials, n up to 64), so
/// this floor keeps the metric around 5e-10 for healthy updates while any
/// genuine defect — a wrong root, a missed deflation — still lands far
/// above the 1e-8 acceptance bound.
const SIGMA_GUARD: f64 = 1e-4;

/// An SVD triple A = U S V^T with U m-by-m, S m-by-n, V n-by-n.
///
/// The constructor enforces shapes, finiteness, and nonnegative descending
/// singular values. Orthogonality of U and V is the caller's contract (the
/// update assumes defects of roughly 1e-8 or better and produces factors
/// good to about 1e-7); it is not revalidated here because that would cost
/// more than the update itself.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub s: DiagRect,
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn new(u: DenseMatrix, s: DiagRect, v: DenseMatrix) -> Result<Self> {
        if u.rows() != u.cols() || v.rows() != v.cols() {
            return Err(Error::DimensionMismatch("U and V must be square"));
        }
        if s.rows() != u.rows() || s.cols() != v.rows() {
            return Err(Error::DimensionMismatch("S shape vs U and V"));
        }
        if s.diag().windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Precondition("singular values must be descending"));
        }
        Ok(Self { u, s, v })
    }

    pub fn rows(&self) -> usize {
        self.u.rows()
    }

    pub fn cols(&self) -> usize {
        self.v.rows()
    }

    /// Dense U S V^T, for oracles and error metrics.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n) = (self.rows(), self.cols());
        let mut svt = DenseMatrix::zeros(m, n);
        for (i, &s) in self.s.diag().iter().enumerate() {
            for j in 0..n {
                svt.set(i, j, s * self.v.get(j, i));
            }
        }
        self.u.matmul(&svt).expect("shapes fixed by constructor")
    }
}

/// The projected quantities every update starts from.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateIngredients {
    /// A b (length m).
    pub b_tilde: Vec<f64>,
    /// A^T a (length n).
    pub a_tilde: Vec<f64>,
    /// ||b||^2.
    pub beta: f64,
    /// ||a||^2.
    pub alpha: f64,
    /// Left Gram eigenvalues sigma_i^2 (length m).
    pub du: Vec<f64>,
    /// Right Gram eigenvalues, sigma_i^2 padded with n-m zeros (length n).
    pub dv: Vec<f64>,
}

/// Computes b~ = U S V^T b, a~ = V S^T U^T a, beta = ||b||^2,
/// alpha = ||a||^2 and the two Gram spectra.
pub fn prepare_update(svd: &SvdFactors, a: &[f64], b: &[f64]) -> Result<UpdateIngredients> {
    let (m, n) = (svd.rows(), svd.cols());
    if a.len() != m {
        return Err(Error::DimensionMismatch("a vs row dimension"));
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch("b vs column dimension"));
    }
    check_finite(a)?;
    check_finite(b)?;

    let b_tilde = svd.u.matvec(&svd.s.matvec(&svd.v.tr_matvec(b)?)?)?;
    let a_tilde = svd.v.matvec(&svd.s.tr_matvec(&svd.u.tr_matvec(a)?)?)?;
    let beta = b.iter().map(|x| x * x).sum();
    let alpha = a.iter().map(|x| x * x).sum();
    let du: Vec<f64> = svd.s.diag().iter().map(|s| s * s).collect();
    let mut dv = du.clone();
    dv.resize(n, 0.0);
    Ok(UpdateIngredients { b_tilde, a_tilde, beta, alpha, du, dv })
}

/// Nanoseconds spent in each phase of an update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseTimings {
    pub prepare_ns: u64,
    pub secular_ns: u64,
    pub matvec_ns: u64,
    pub total_ns: u64,
}

/// Quality metrics and phase timings of one update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateReport {
    /// max |A_hat - U S V^T| / sigma_max(A_hat). Defined as 0 for the
    /// zero matrix (whose factors reproduce it exactly).
    pub error: f64,
    pub orth_u: f64,
    pub orth_v: f64,
    /// Largest guarded relative gap |l - r| / max(l, r, 1e-4 * top) between
    /// the left-side eigenvalues and the m largest right-side eigenvalues,
    /// both descending. Pairs carrying at least 1e-4 of the spectrum's top
    /// are compared in the plain relative sense; smaller ones are measured
    /// against that floor, i.e. held to absolute agreement at the
    /// 1e-12 * top level. The floor reflects what two independently rounded
    /// eigenvalue pipelines can promise: each computes its spectrum to
    /// absolute accuracy on the order of eps * top, so the plain relative
    /// gap of a near-zero pair is noise, not signal.
    pub sigma_consistency: f64,
    /// True when a left eigenvalue fell below -1e-8 times the largest one
    /// before being clamped to zero.
    pub negative_clamped: bool,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone, Copy, Default)]
struct UpdatePhases {
    secular_ns: u64,
    matvec_ns: u64,
}

/// out = cx*x + cy*y.
fn combine(x: &[f64], y: &[f64], cx: f64, cy: f64) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| cx * a + cy * b).collect()
}

fn rank_one_sym_update_timed(
    u: &DenseMatrix,
    d: &[f64],
    a1: &[f64],
    rho: f64,
    backend: Backend,
) -> Result<(DenseMatrix, Vec<f64>, UpdatePhases)> {
    let n = d.len();
    if u.rows() != n || u.cols() != n {
        return Err(Error::DimensionMismatch("eigenvector matrix vs eigenvalue count"));
    }
    if a1.len() != n {
        return Err(Error::DimensionMismatch("update vector vs eigenvalue count"));
    }
    check_finite(d)?;
    check_finite(a1)?;
    if !rho.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut phases = UpdatePhases::default();
    if n == 0 || rho == 0.0 || a1.iter().all(|&x| x == 0.0) {
        return Ok((u.clone(), d.to_vec(), phases)); // exact no-op
    }

    // Project the update vector and move to ascending-eigenvalue order.
    let abar = u.tr_matvec(a1)?;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let d_sorted: Vec<f64> = perm.iter().map(|&i| d[i]).collect();
    let z: Vec<f64> = perm.iter().map(|&i| abar[i]).collect();

    let clock = Instant::now();
    let problem = SecularProblem::new(d_sorted, z, rho)?;
    let defl = deflate(&problem, None)?;
    let roots = if defl.reduced.d.is_empty() {
        None
    } else {
        Some(solve_secular(&defl.reduced)?)
    };
    phases.secular_ns += clock.elapsed().as_nanos() as u64;

    // Deflation rotations act on the eigenvector columns; indices live in
    // the sorted order, so route them through the permutation.
    let mut u_work = u.clone();
    for rot in &defl.rotations {
        let (ci, cj) = (perm[rot.i], perm[rot.j]);
        for r in 0..n {
            let vi = u_work.get(r, ci);
            let vj = u_work.get(r, cj);
            u_work.set(r, ci, rot.c * vi + rot.s * vj);
            u_work.set(r, cj, -rot.s * vi + rot.c * vj);
        }
    }

    let k = defl.active.len();
    let clock = Instant::now();
    let (u_tilde, mu) = match roots {
        Some(roots) => {
            let sys = CauchySystem::new(
                defl.reduced.d.clone(),
                roots.mu.clone(),
                defl.reduced.z.clone(),
            )?;
            let mut u_active = DenseMatrix::zeros(n, k);
            for (c, &ai) in defl.active.iter().enumerate() {
                u_active.set_col(c, &u_work.col(perm[ai]));
            }
            (apply_ctilde(&sys, &u_active, backend)?, roots.mu)
        }
        None => (DenseMatrix::zeros(n, 0), Vec::new()),
    };
    phases.matvec_ns += clock.elapsed().as_nanos() as u64;

    // Merge solved roots (ascending) with deflated pairs (ascending by
    // construction) into one ascending spectrum with matching columns.
    let mut u_new = DenseMatrix::zeros(n, n);
    let mut d_new = Vec::with_capacity(n);
    let (mut ia, mut id) = (0usize, 0usize);
    for col in 0..n {
        let take_root = if ia >= mu.len() {
            false
        } else if id >= defl.deflated.len() {
            true
        } else {
            mu[ia] <= defl.deflated[id].1
        };
        if take_root {
            d_new.push(mu[ia]);
            u_new.set_col(col, &u_tilde.col(ia));
            ia += 1;
        } else {
            let (idx, val) = defl.deflated[id];
            d_new.push(val);
            u_new.set_col(col, &u_work.col(perm[idx]));
            id += 1;
        }
    }
    Ok((u_new, d_new, phases))
}

/// One symmetric rank-one eigenupdate: given U D U^T (any eigenvalue order)
/// returns the eigendecomposition of U (D + rho a-bar a-bar^T) U^T with
/// a-bar = U^T a1. Eigenvalues come back ascending with matching columns;
/// deflated coordinates keep their (rotated) original vectors. rho = 0 or
/// a1 = 0 return the inputs unchanged.
pub fn rank_one_sym_update(
    u: &DenseMatrix,
    d: &[f64],
    a1: &[f64],
    rho: f64,
    backend: Backend,
) -> Result<(DenseMatrix, Vec<f64>)> {
    let (u_new, d_new, _) = rank_one_sym_update_timed(u, d, a1, rho, backend)?;
    Ok((u_new, d_new))
}

/// Flips right singular vectors so every pair satisfies u_i^T A_hat v_i >= 0.
///
/// Columns whose singular value is at or below 1e-12 of the largest are left
/// alone (their sign carries no reconstruction weight). U passes through
/// untouched; only V is corrected.
pub fn align_signs(
    u: DenseMatrix,
    s: &DiagRect,
    mut v: DenseMatrix,
    a_hat: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if a_hat.rows() != u.rows() || a_hat.cols() != v.rows() {
        return Err(Error::DimensionMismatch("target matrix vs factor shapes"));
    }
    if s.rows() != u.rows() || s.cols() != v.rows() {
        return Err(Error::DimensionMismatch("S shape vs U and V"));
    }
    let smax = s.diag().iter().fold(0.0f64, |m, &x| m.max(x));
    let tol = 1e-12 * smax;
    for i in 0..s.diag().len() {
        if s.diag()[i] <= tol {
            continue;
        }
        let av = a_hat.matvec(&v.col(i))?;
        let mut proj = 0.0;
        for (r, &w) in av.iter().enumerate() {
            proj += u.get(r, i) * w;
        }
        if proj < 0.0 {
            for r in 0..v.rows() {
                let x = v.get(r, i);
                v.set(r, i, -x);
            }
        }
    }
    Ok((u, v))
}

/// Largest singular value by power iteration on A^T A, to 1e-12 relative.
fn largest_singular_value(a: &DenseMatrix) -> Result<f64> {
    if a.max_abs() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let n = a.cols();
    // Deterministic start with a slight ramp so no symmetry can hide the
    // dominant direction; restarted from a coordinate direction if it does.
    let mut v: Vec<f64> = (0..n).map(|j| 1.0 + 1e-3 * (j + 1) as f64 / n as f64).collect();
    let norm = |x: &[f64]| x.iter().map(|t| t * t).sum::<f64>().sqrt();
    let nv = norm(&v);
    for x in v.iter_mut() {
        *x /= nv;
    }
    let mut sigma = 0.0f64;
    for _ in 0..5000 {
        let w = a.matvec(&v)?;
        let estimate = norm(&w);
        let z = a.tr_matvec(&w)?;
        let nz = norm(&z);
        if nz == 0.0 {
            // v was in the null space; restart from the column with the
            // largest head entry, which cannot be annihilated.
            let mut best = (0usize, 0.0f64);
            for j in 0..n {
                let cn = norm(&a.col(j));
                if cn > best.1 {
                    best = (j, cn);
                }
            }
            v = vec![0.0; n];
            v[best.0] = 1.0;
            continue;
        }
        for (x, zi) in v.iter_mut().zip(&z) {
            *x = zi / nz;
        }
        if (estimate - sigma).abs() <= 1e-12 * estimate {
            return Ok(estimate);
        }
        sigma = estimate;
    }
    Ok(sigma)
}

/// The reconstruction metric: max entrywise |A_hat - U S V^T| divided by
/// the largest singular value of A_hat (computed directly from A_hat).
pub fn reconstruction_error(a_hat: &DenseMatrix, factors: &SvdFactors) -> Result<f64> {
    if a_hat.rows() != factors.rows() || a_hat.cols() != factors.cols() {
        return Err(Error::DimensionMismatch("target matrix vs factor shapes"));
    }
    let smax = largest_singular_value(a_hat)?;
    let rec = factors.reconstruct();
    let mut worst = 0.0f64;
    for (x, y) in a_hat.as_slice().iter().zip(rec.as_slice()) {
        worst = worst.max((x - y).abs());
    }
    Ok(worst / smax)
}

/// Updates the SVD of A to the SVD of A + a b^T.
///
/// Requires m <= n (transpose the problem otherwise). Singular values come
/// from the left-side eigenvalues, clamped at zero (a value below
/// -1e-8 times the largest sets the report flag), sorted descending with
/// ties broken by original position. The right side is sorted the same way
/// and used for the consistency metric. Phase timings cover the update
/// itself; the report's quality metrics are computed afterwards and not
/// charged to any phase.
pub fn update_svd(
    svd: &SvdFactors,
    a: &[f64],
    b: &[f64],
    backend: Backend,
) -> Result<(SvdFactors, UpdateReport)> {
    backend.validate()?;
    let (m, n) = (svd.rows(), svd.cols());
    if m == 0 || n == 0 {
        return Err(Error::Precondition("matrix must be nonempty"));
    }
    if m > n {
        return Err(Error::Precondition("update requires rows <= columns"));
    }

    let clock_total = Instant::now();
    let clock = Instant::now();
    let ing = prepare_update(svd, a, b)?;
    let mut timings = PhaseTimings { prepare_ns: clock.elapsed().as_nanos() as u64, ..Default::default() };

    // Split each rank-two Gram correction into two rank-one updates.
    let left = schur_sym_2x2([[ing.beta, 1.0], [1.0, 0.0]])?;
    let a1 = combine(a, &ing.b_tilde, left.q[0][0], left.q[1][0]);
    let b1 = combine(a, &ing.b_tilde, left.q[0][1], left.q[1][1]);
    let right = schur_sym_2x2([[ing.alpha, 1.0], [1.0, 0.0]])?;
    let a2 = combine(b, &ing.a_tilde, right.q[0][0], right.q[1][0]);
    let b2 = combine(b, &ing.a_tilde, right.q[0][1], right.q[1][1]);

    let run = |u: &DenseMatrix, d: &[f64], x: &[f64], rho: f64, t: &mut PhaseTimings| {
        rank_one_sym_update_timed(u, d, x, rho, backend).map(|(un, dn, ph)| {
            t.secular_ns += ph.secular_ns;
            t.matvec_ns += ph.matvec_ns;
            (un, dn)
        })
    };
    let (u1, d1) = run(&svd.u, &ing.du, &a1, left.rho1, &mut timings)?;
    let (u2, d2) = run(&u1, &d1, &b1, left.rho2, &mut timings)?;
    let (v1, e1) = run(&svd.v, &ing.dv, &a2, right.rho1, &mut timings)?;
    let (v2, e2) = run(&v1, &e1, &b2, right.rho2, &mut timings)?;

    // Left eigenvalues are authoritative for the singular values.
    let max_eig = d2.iter().fold(0.0f64, |mx, &v| mx.max(v));
    let negative_clamped = d2.iter().any(|&v| v < -1e-8 * max_eig);
    let descending = |vals: &[f64]| {
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]).then(i.cmp(&j)));
        order
    };
    let left_order = descending(&d2);
    let sigma: Vec<f64> = left_order.iter().map(|&i| d2[i].max(0.0).sqrt()).collect();
    let mut u_final = DenseMatrix::zeros(m, m);
    for (c, &i) in left_order.iter().enumerate() {
        u_final.set_col(c, &u2.col(i));
    }
    let right_order = descending(&e2);
    let mut v_final = DenseMatrix::zeros(n, n);
    for (c, &i) in right_order.iter().enumerate() {
        v_final.set_col(c, &v2.col(i));
    }

    let s_new = DiagRect::new(m, n, sigma)?;
    let mut a_hat = svd.reconstruct();
    for i in 0..m {
        for j in 0..n {
            let x = a_hat.get(i, j);
            a_hat.set(i, j, x + a[i] * b[j]);
        }
    }
    let (u_final, v_final) = align_signs(u_final, &s_new, v_final, &a_hat)?;
    let factors = SvdFactors::new(u_final, s_new, v_final)?;
    timings.total_ns = clock_total.elapsed().as_nanos() as u64;

    // Quality metrics, outside the timed region.
    let error = match reconstruction_error(&a_hat, &factors) {
        Ok(e) => e,
        Err(Error::ZeroMatrix) => 0.0,
        Err(e) => return Err(e),
    };
    let orth_u = orthogonality_defect(&factors.u);
    let orth_v = orthogonality_defect(&factors.v);
    let eig_scale = d2.iter().chain(&e2).fold(0.0f64, |mx, &v| mx.max(v.max(0.0)));
    let mut sigma_consistency = 0.0f64;
    for c in 0..m {
        let l = d2[left_order[c]].max(0.0);
        let r = e2[right_order[c]].max(0.0);
        let den = l.max(r).max(SIGMA_GUARD * eig_scale);
        sigma_consistency = sigma_consistency.max((l - r).abs() / den);
    }

    let report = UpdateReport {
        error,
        orth_u,
        orth_v,
        sigma_consistency,
        negative_clamped,
        timings,
    };
    Ok((factors, report))
}
