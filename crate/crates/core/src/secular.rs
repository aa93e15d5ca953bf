//! Deflation and root finding for the secular equation.
//!
//! A symmetric rank-one correction D + rho z z^T of a diagonal matrix has
//! eigenvalues at the zeros of
//!
//! ```text
//! w(mu) = 1 + rho * sum_j z_j^2 / (d_j - mu)
//! ```
//!
//! provided the poles d_j are distinct and every weight z_j is nonzero.
//! [`deflate`] enforces exactly that precondition: entries with negligible
//! weight pass through unchanged, and (near-)repeated poles are merged by
//! Givens rotations that concentrate their combined weight on one carrier.
//! [`solve_secular`] then brackets one root per interval and drives a
//! two-pole rational model with a bisection safeguard.
//!
//! For rho > 0 the roots interlace the poles from the right:
//! d_1 < mu_1 < d_2 < ... < d_k < mu_k <= d_k + rho ||z||^2. Negative rho is
//! reduced to this case by negating and reversing the problem.

use crate::error::{Error, Result};
use crate::matrix::check_finite;

/// Pole/weight description of one secular equation.
#[derive(Debug, Clone, PartialEq)]
pub struct SecularProblem {
    /// Poles, ascending. After deflation: strictly increasing.
    pub d: Vec<f64>,
    /// Weights, same length as `d`. After deflation: all nonzero.
    pub z: Vec<f64>,
    /// Rank-one scale. Any finite nonzero value; the sign picks the side on
    /// which roots interlace.
    pub rho: f64,
}

impl SecularProblem {
    pub fn new(d: Vec<f64>, z: Vec<f64>, rho: f64) -> Result<Self> {
        if d.len() != z.len() {
            return Err(Error::DimensionMismatch("poles vs weights length"));
        }
        check_finite(&d)?;
        check_finite(&z)?;
        if !rho.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self { d, z, rho })
    }

    /// sum of z_j^2.
    pub fn weight_norm2(&self) -> f64 {
        self.z.iter().map(|z| z * z).sum()
    }
}

/// Plane rotation on coordinates (`i`, `j`) used during deflation. Applied to
/// an eigenvector matrix U as: col_i <- c * col_i + s * col_j,
/// col_j <- -s * col_i + c * col_j (with the original col_i).
#[derive(Debug, Clone, PartialEq)]
pub struct GivensRotation {
    pub i: usize,
    pub j: usize,
    pub c: f64,
    pub s: f64,
}

/// Outcome of deflation: the reduced strictly-separated problem plus the
/// bookkeeping needed to undo the reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflatedProblem {
    /// Strictly increasing poles, nonzero weights; may be empty.
    pub reduced: SecularProblem,
    /// Indices (into the input arrays) of the entries that stayed active.
    pub active: Vec<usize>,
    /// (input index, eigenvalue) pairs settled without solving.
    pub deflated: Vec<(usize, f64)>,
    /// Rotations to apply to the eigenvector columns, in order.
    pub rotations: Vec<GivensRotation>,
    /// Threshold actually used.
    pub tol: f64,
}

/// Splits a secular problem into a strictly-separated reduced problem and a
/// list of already-settled eigenvalues.
///
/// `d` must be ascending (ties allowed). With `tol = None` the threshold
/// defaults to `1e-12 * max(|d_first|, |d_last|, |rho| * ||z||^2)`.
///
/// Two-phase reduction:
/// 1. entries with |z_i| <= tol deflate in place with eigenvalue d_i;
/// 2. a left-to-right carrier scan merges every surviving pole within `tol`
///    of the current carrier into it via a Givens rotation, zeroing the
///    merged weight and deflating that entry with its own pole value.
///
/// Running `deflate` again on `reduced` with the same threshold is a no-op.
pub fn deflate(p: &SecularProblem, tol: Option<f64>) -> Result<DeflatedProblem> {
    let n = p.d.len();
    if p.z.len() != n {
        return Err(Error::DimensionMismatch("poles vs weights length"));
    }
    check_finite(&p.d)?;
    check_finite(&p.z)?;
    if !p.rho.is_finite() {
        return Err(Error::NonFinite);
    }
    if p.d.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("deflate expects ascending poles"));
    }

    let tol = match tol {
        Some(t) => {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::Precondition("deflation threshold must be finite and >= 0"));
            }
            t
        }
        None => {
            let scale = p
                .d
                .first()
                .map(|f| f.abs())
                .unwrap_or(0.0)
                .max(p.d.last().map(|l| l.abs()).unwrap_or(0.0))
                .max(p.rho.abs() * p.weight_norm2());
            1e-12 * scale
        }
    };

    let mut z = p.z.clone();
    let mut deflated: Vec<(usize, f64)> = Vec::new();
    let mut rotations: Vec<GivensRotation> = Vec::new();

    // Phase 1: negligible weights.
    let mut survivors: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        if z[i].abs() <= tol {
            deflated.push((i, p.d[i]));
        } else {
            survivors.push(i);
        }
    }

    // Phase 2: merge (near-)repeated poles into the leftmost carrier.
    let mut active: Vec<usize> = Vec::with_capacity(survivors.len());
    let mut carrier: Option<usize> = None;
    for &j in &survivors {
        match carrier {
            Some(i) if p.d[j] - p.d[i] <= tol => {
                let r = f64::hypot(z[i], z[j]);
                rotations.push(GivensRotation { i, j, c: z[i] / r, s: z[j] / r });
                z[i] = r;
                z[j] = 0.0;
                deflated.push((j, p.d[j]));
            }
            _ => {
                carrier = Some(j);
                active.push(j);
            }
        }
    }
    deflated.sort_by_key(|&(i, _)| i);

    let reduced = SecularProblem {
        d: active.iter().map(|&i| p.d[i]).collect(),
        z: active.iter().map(|&i| z[i]).collect(),
        rho: p.rho,
    };
    Ok(DeflatedProblem { reduced, active, deflated, rotations, tol })
}

/// Roots of the secular equation, ascending, one per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SecularRoots {
    pub mu: Vec<f64>,
    /// w(mu_i) at the accepted iterate, one per root.
    pub residuals: Vec<f64>,
}

/// Evaluates w(mu) = 1 + rho * sum z_j^2 / (d_j - mu).
///
/// Fails with [`Error::PoleHit`] when `mu` is within a few ulps of a pole.
pub fn secular_eval(p: &SecularProblem, mu: f64) -> Result<f64> {
    if !mu.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut sum = 0.0;
    for (j, (&d, &z)) in p.d.iter().zip(&p.z).enumerate() {
        let gap = d - mu;
        let tol = f64::EPSILON * d.abs().max(mu.abs()).max(f64::MIN_POSITIVE);
        if gap.abs() < tol {
            return Err(Error::PoleHit { index: j });
        }
        sum += z * z / gap;
    }
    Ok(1.0 + p.rho * sum)
}

const MAX_ITERS: usize = 100;

/// Finds every root of a deflated secular problem.
///
/// Preconditions (checked): strictly increasing poles, nonzero weights,
/// finite nonzero rho. An empty problem yields an empty root set.
///
/// Each interval gets a base pole chosen by a midpoint sign test; iterates
/// are tracked as offsets tau from that base so the critical difference
/// d_j - mu keeps full precision near convergence. Interior intervals use a
/// two-pole rational model (tangent fit on each side of the bracket), the
/// trailing interval a one-pole model; any candidate that leaves the open
/// bracket, or fails to shrink |w|, falls back to bisection. Iteration stops
/// when |w| drops below the evaluation noise floor
/// `1e-13 * (1 + |rho| * sum |z_j^2 / (d_j - mu)|)` or the bracket is
/// exhausted; exceeding 100 iterations reports
/// [`Error::NoConvergence`] for the offending interval.
pub fn solve_secular(p: &SecularProblem) -> Result<SecularRoots> {
    let k = p.d.len();
    if p.z.len() != k {
        return Err(Error::DimensionMismatch("poles vs weights length"));
    }
    if k == 0 {
        return Ok(SecularRoots { mu: Vec::new(), residuals: Vec::new() });
    }
    check_finite(&p.d)?;
    check_finite(&p.z)?;
    if !p.rho.is_finite() || p.rho == 0.0 {
        return Err(Error::Precondition("solve_secular expects nonzero rho"));
    }
    if p.d.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("solve_secular expects strictly increasing poles"));
    }
    if p.z.iter().any(|&z| z == 0.0) {
        return Err(Error::Precondition("solve_secular expects nonzero weights"));
    }

    if p.rho > 0.0 {
        solve_positive(&p.d, &p.z, p.rho)
    } else {
        // Negate the spectrum: eigenvalues of -(D + rho z z^T) are the
        // negated originals, and the flipped problem has positive rho.
        let d_neg: Vec<f64> = p.d.iter().rev().map(|&d| -d).collect();
        let z_rev: Vec<f64> = p.z.iter().rev().copied().collect();
        let flipped = solve_positive(&d_neg, &z_rev, -p.rho)?;
        let mu = flipped.mu.iter().rev().map(|&m| -m).collect();
        let residuals = flipped.residuals.iter().rev().copied().collect();
        Ok(SecularRoots { mu, residuals })
    }
}

/// Value and split derivatives of w at base + tau, where delta[j] = d[j] - base.
struct EvalSplit {
    w: f64,
    /// sum over j <= split of z_j^2 / (delta_j - tau) and its derivative.
    psi1: f64,
    psi1p: f64,
    /// Same for j > split.
    psi2: f64,
    psi2p: f64,
    /// sum |z_j^2 / (delta_j - tau)|, the natural noise scale of w.
    abs_sum: f64,
}

fn eval_split(delta: &[f64], z: &[f64], rho: f64, split: usize, tau: f64) -> EvalSplit {
    let mut psi1 = 0.0;
    let mut psi1p = 0.0;
    let mut psi2 = 0.0;
    let mut psi2p = 0.0;
    let mut abs_sum = 0.0;
    for j in 0..delta.len() {
        let gap = delta[j] - tau;
        let term = z[j] * z[j] / gap;
        abs_sum += term.abs();
        let termp = term / gap;
        if j <= split {
            psi1 += term;
            psi1p += termp;
        } else {
            psi2 += term;
            psi2p += termp;
        }
    }
    EvalSplit { w: 1.0 + rho * (psi1 + psi2), psi1, psi1p, psi2, psi2p, abs_sum }
}

fn solve_positive(d: &[f64], z: &[f64], rho: f64) -> Result<SecularRoots> {
    debug_assert!(rho > 0.0);
    let k = d.len();
    let znorm2: f64 = z.iter().map(|z| z * z).sum();
    let mut mu = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);

    for i in 0..k {
        let (m, r) = solve_interval(d, z, rho, znorm2, i)
            .map_err(|e| annotate_interval(e, d, rho, znorm2, i))?;
        mu.push(m);
        residuals.push(r);
    }
    Ok(SecularRoots { mu, residuals })
}

fn annotate_interval(e: Error, d: &[f64], rho: f64, znorm2: f64, i: usize) -> Error {
    match e {
        Error::NoConvergence { index: _, lo, hi } => Error::NoConvergence { index: i, lo, hi },
        other => {
            let _ = (d, rho, znorm2);
            other
        }
    }
}

/// Solves for root i of a clean positive-rho problem. Returns (mu, w(mu)).
fn solve_interval(d: &[f64], z: &[f64], rho: f64, znorm2: f64, i: usize) -> Result<(f64, f64)> {
    let k = d.len();
    let last = i == k - 1;
    let width = if last { rho * znorm2 } else { d[i + 1] - d[i] };

    // Base pole: for interior intervals a midpoint sign test decides whether
    // the root sits in the left or right half; the nearer pole becomes the
    // origin of the tau offsets. The trailing interval is always based on its
    // single pole.
    let (base_idx, mut lo, mut hi) = if last {
        (i, 0.0, width)
    } else {
        let mid = 0.5 * (d[i] + d[i + 1]);
        let delta_i: Vec<f64> = d.iter().map(|&dj| dj - d[i]).collect();
        let at_mid = eval_split(&delta_i, z, rho, i, 0.5 * width);
        if at_mid.w >= 0.0 {
            (i, 0.0, 0.5 * width)
        } else {
            let _ = mid;
            (i + 1, -0.5 * width, 0.0)
        }
    };
    let base = d[base_idx];
    let delta: Vec<f64> = d.iter().map(|&dj| dj - base).collect();

    // Model poles, as offsets from the base.
    let p1 = delta[i];
    let p2 = if last { f64::INFINITY } else { delta[i + 1] };

    // The trailing-edge value w(hi) can be an exact zero (single-pole
    // problems land there); accept it before iterating.
    if last {
        let edge = eval_split(&delta, z, rho, i, hi);
        if edge.w.abs() <= noise_floor(rho, edge.abs_sum) {
            return Ok((base + hi, edge.w));
        }
        if edge.w < 0.0 {
            // Root pushed against the theoretical upper bound by rounding;
            // widen the bracket marginally so it still straddles.
            hi *= 1.0 + 16.0 * f64::EPSILON;
        }
    }

    let mut tau = 0.5 * (lo + hi);
    let mut best: Option<(f64, f64)> = None;
    let mut prev_abs = f64::INFINITY;
    let mut force_bisect = false;

    for _ in 0..MAX_ITERS {
        let ev = eval_split(&delta, z, rho, i, tau);
        let wabs = ev.w.abs();
        if best.map_or(true, |(_, bw): (f64, f64)| wabs < bw.abs()) {
            best = Some((tau, ev.w));
        }
        if wabs <= noise_floor(rho, ev.abs_sum) {
            return Ok((base + tau, ev.w));
        }
        // w is increasing in the bracket: negative means the root lies right.
        if ev.w < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        if bracket_exhausted(base, lo, hi) {
            let (bt, bw) = best.unwrap();
            return Ok((base + bt, bw));
        }

        let improving = wabs < prev_abs;
        prev_abs = wabs;

        let candidate = if force_bisect || !improving {
            None
        } else if last {
            one_pole_step(&ev, rho, p1, tau)
        } else {
            two_pole_step(&ev, rho, p1, p2, tau)
        };
        force_bisect = false;

        tau = match candidate {
            Some(t) if t > lo && t < hi => t,
            _ => {
                force_bisect = false;
                0.5 * (lo + hi)
            }
        };
    }

    Err(Error::NoConvergence { index: i, lo: base + lo, hi: base + hi })
}

fn noise_floor(rho: f64, abs_sum: f64) -> f64 {
    1e-13 * (1.0 + rho.abs() * abs_sum)
}

fn bracket_exhausted(base: f64, lo: f64, hi: f64) -> bool {
    let scale = base.abs().max(lo.abs().max(hi.abs())).max(f64::MIN_POSITIVE);
    hi - lo <= 4.0 * f64::EPSILON * scale
}

/// Two-pole rational step: tangent-fit s/(p - tau) + c on each side of the
/// bracket, then solve the resulting quadratic for the model root.
fn two_pole_step(ev: &EvalSplit, rho: f64, p1: f64, p2: f64, tau: f64) -> Option<f64> {
    let g1 = p1 - tau;
    let g2 = p2 - tau;
    let s1 = ev.psi1p * g1 * g1;
    let c1 = ev.psi1 - ev.psi1p * g1;
    let s2 = ev.psi2p * g2 * g2;
    let c2 = ev.psi2 - ev.psi2p * g2;

    let cc = 1.0 + rho * (c1 + c2);
    let aa = rho * s1;
    let bb = rho * s2;
    // cc (p1-t)(p2-t) + aa (p2-t) + bb (p1-t) = 0, expanded in t.
    let qa = cc;
    let qb = -(cc * (p1 + p2) + aa + bb);
    let qc = cc * p1 * p2 + aa * p2 + bb * p1;
    solve_quadratic_in(qa, qb, qc, p1, p2)
}

/// One-pole step for the trailing interval: model w = 1 + rho(c - s/tau).
fn one_pole_step(ev: &EvalSplit, rho: f64, p1: f64, tau: f64) -> Option<f64> {
    debug_assert_eq!(p1, 0.0);
    let psi = ev.psi1 + ev.psi2;
    let psip = ev.psi1p + ev.psi2p;
    let s = psip * tau * tau;
    let c = psi + psip * tau;
    let denom = 1.0 + rho * c;
    if denom == 0.0 {
        return None;
    }
    let t = rho * s / denom;
    t.is_finite().then_some(t)
}

/// Root of qa t^2 + qb t + qc inside the open interval (p1, p2), if any.
/// The model is monotone there, so at most one root qualifies.
fn solve_quadratic_in(qa: f64, qb: f64, qc: f64, p1: f64, p2: f64) -> Option<f64> {
    let mut roots = [f64::NAN; 2];
    if qa == 0.0 {
        if qb == 0.0 {
            return None;
        }
        roots[0] = -qc / qb;
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let q = -0.5 * (qb + if qb >= 0.0 { sq } else { -sq });
        roots[0] = q / qa;
        if q != 0.0 {
            roots[1] = qc / q;
        }
    }
    roots
        .iter()
        .copied()
        .find(|t| t.is_finite() && *t > p1 && *t < p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::jacobi_eigh;
    use crate::matrix::DenseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_matches_hand_computation() {
        let p = SecularProblem::new(vec![5.0], vec![2.0], 3.0).unwrap();
        // w(17) = 1 + 3 * 4 / (5 - 17) = 0, exactly.
        assert_eq!(secular_eval(&p, 17.0).unwrap(), 0.0);
        // w(6) = 1 + 12 / (5 - 6) = -11.
        assert_eq!(secular_eval(&p, 6.0).unwrap(), -11.0);
        assert_eq!(secular_eval(&p, 5.0).unwrap_err(), Error::PoleHit { index: 0 });
    }

    #[test]
    fn eval_near_zero_at_tabulated_root() {
        let r = 0.5f64.sqrt();
        let p = SecularProblem::new(vec![0.0, 1.0], vec![r, r], 1.0).unwrap();
        let w = secular_eval(&p, 0.29289321881345254).unwrap();
        assert!(w.abs() <= 1e-5, "w = {w:e}");
    }

    #[test]
    fn deflate_drops_zero_weights() {
        let p = SecularProblem::new(vec![0.0, 1.0], vec![0.0, 1.0], 1.0).unwrap();
        let out = deflate(&p, None).unwrap();
        assert_eq!(out.deflated, vec![(0, 0.0)]);
        assert_eq!(out.active, vec![1]);
        assert_eq!(out.reduced.d, vec![1.0]);
        assert_eq!(out.reduced.z, vec![1.0]);
        assert!(out.rotations.is_empty());
    }

    #[test]
    fn deflate_merges_repeated_poles_with_exact_rotation() {
        let p = SecularProblem::new(vec![1.0, 1.0], vec![0.6, 0.8], 1.0).unwrap();
        let out = deflate(&p, None).unwrap();
        assert_eq!(out.active, vec![0]);
        assert_eq!(out.deflated, vec![(1, 1.0)]);
        assert_eq!(out.reduced.z, vec![1.0]);
        assert_eq!(out.rotations.len(), 1);
        let g = &out.rotations[0];
        assert_eq!((g.i, g.j), (0, 1));
        assert!((g.c - 0.6).abs() < 1e-15 && (g.s - 0.8).abs() < 1e-15);
    }

    #[test]
    fn deflate_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(1..20);
            let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            d.sort_by(f64::total_cmp);
            // Plant duplicates and zero weights.
            if n > 2 {
                d[1] = d[0];
            }
            let z: Vec<f64> = (0..n)
                .map(|i| if i % 5 == 3 { 0.0 } else { rng.random_range(-1.0..1.0) })
                .collect();
            let p = SecularProblem::new(d, z, 1.5).unwrap();
            let out = deflate(&p, None).unwrap();
            let again = deflate(&out.reduced, Some(out.tol)).unwrap();
            assert_eq!(again.reduced, out.reduced);
            assert!(again.deflated.is_empty());
            assert!(again.rotations.is_empty());
        }
    }

    #[test]
    fn solve_single_pole_lands_on_exact_root() {
        let p = SecularProblem::new(vec![5.0], vec![2.0], 3.0).unwrap();
        let roots = solve_secular(&p).unwrap();
        assert_eq!(roots.mu, vec![17.0]);
    }

    #[test]
    fn solve_two_by_two_matches_closed_form() {
        let r = 0.5f64.sqrt();
        let p = SecularProblem::new(vec![0.0, 1.0], vec![r, r], 1.0).unwrap();
        let roots = solve_secular(&p).unwrap();
        let e1 = 1.0 - 0.5f64.sqrt();
        let e2 = 1.0 + 0.5f64.sqrt();
        assert!((roots.mu[0] - e1).abs() < 1e-14, "got {:?}", roots.mu);
        assert!((roots.mu[1] - e2).abs() < 1e-14, "got {:?}", roots.mu);
    }

    #[test]
    fn solve_negative_rho_mirrors() {
        let r = 0.5f64.sqrt();
        let p = SecularProblem::new(vec![0.0, 1.0], vec![r, r], -1.0).unwrap();
        let roots = solve_secular(&p).unwrap();
        // diag(0,1) - z z^T has eigenvalues -sqrt(1/2), +sqrt(1/2).
        let s = 0.5f64.sqrt();
        assert!((roots.mu[0] + s).abs() < 1e-14, "got {:?}", roots.mu);
        assert!((roots.mu[1] - s).abs() < 1e-14, "got {:?}", roots.mu);
        // Left-interlacing: mu_1 < d_1 < mu_2 < d_2.
        assert!(roots.mu[0] < 0.0 && roots.mu[1] > 0.0 && roots.mu[1] < 1.0);
    }

    /// Assembles all eigenvalues of D + rho z z^T through the deflate/solve
    /// pipeline, ascending.
    fn secular_spectrum(d: &[f64], z: &[f64], rho: f64) -> Vec<f64> {
        let p = SecularProblem::new(d.to_vec(), z.to_vec(), rho).unwrap();
        let out = deflate(&p, None).unwrap();
        let roots = if out.reduced.d.is_empty() {
            Vec::new()
        } else {
            solve_secular(&out.reduced).unwrap().mu
        };
        let mut all: Vec<f64> = roots
            .into_iter()
            .chain(out.deflated.iter().map(|&(_, v)| v))
            .collect();
        all.sort_by(f64::total_cmp);
        all
    }

    #[test]
    fn random_problems_match_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..300 {
            let n = rng.random_range(1..=24);
            let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            d.sort_by(f64::total_cmp);
            let mut z: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            // Every third trial stresses the deflation paths.
            if trial % 3 == 0 && n >= 3 {
                z[0] = 0.0;
                d[2] = d[1];
            }
            let rho = if trial % 2 == 0 {
                rng.random_range(0.1..3.0)
            } else {
                -rng.random_range(0.1..3.0)
            };

            let got = secular_spectrum(&d, &z, rho);

            let mut m = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let v = rho * z[i] * z[j] + if i == j { d[i] } else { 0.0 };
                    m.set(i, j, v);
                }
            }
            let (want, _) = jacobi_eigh(&m).unwrap();

            let scale = d.iter().fold(0.0f64, |s, x| s.max(x.abs()))
                + rho.abs() * z.iter().map(|z| z * z).sum::<f64>();
            for (a, b) in got.iter().zip(&want) {
                assert!(
                    (a - b).abs() <= 1e-9 * scale.max(1.0),
                    "trial {trial}: {a} vs {b} (scale {scale:e})"
                );
            }

            // Trace conservation across the pipeline.
            let trace_in: f64 = d.iter().sum::<f64>() + rho * z.iter().map(|z| z * z).sum::<f64>();
            let trace_out: f64 = got.iter().sum();
            let zn: f64 = z.iter().map(|z| z * z).sum();
            assert!(
                (trace_in - trace_out).abs() <= 1e-10 * (n as f64 + rho.abs() * zn).max(1.0) * 10.0,
                "trace drift {:e}",
                trace_in - trace_out
            );
        }
    }

    #[test]
    fn roots_interlace_poles() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let n = rng.random_range(1..=32);
            let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            d.sort_by(f64::total_cmp);
            d.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let k = d.len();
            let z: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            let rho = *[-2.0, -0.5, 0.5, 2.0].iter().nth(rng.random_range(0..4)).unwrap();
            let p = SecularProblem::new(d.clone(), z.clone(), rho).unwrap();
            let roots = solve_secular(&p).unwrap();
            let zn: f64 = z.iter().map(|z| z * z).sum();
            let slack = 1e-12 * (1.0 + d[k - 1].abs().max(d[0].abs()) + rho.abs() * zn);
            if rho > 0.0 {
                for i in 0..k {
                    let upper = if i + 1 < k { d[i + 1] } else { d[k - 1] + rho * zn };
                    assert!(roots.mu[i] > d[i] - slack && roots.mu[i] <= upper + slack);
                }
            } else {
                for i in 0..k {
                    let lower = if i == 0 { d[0] - rho.abs() * zn } else { d[i - 1] };
                    assert!(roots.mu[i] >= lower - slack && roots.mu[i] < d[i] + slack);
                }
            }
        }
    }

    #[test]
    fn rejects_undeflated_input() {
        let p = SecularProblem::new(vec![1.0, 1.0], vec![1.0, 1.0], 1.0).unwrap();
        assert!(matches!(solve_secular(&p), Err(Error::Precondition(_))));
        let p = SecularProblem::new(vec![0.0, 1.0], vec![0.0, 1.0], 1.0).unwrap();
        assert!(matches!(solve_secular(&p), Err(Error::Precondition(_))));
        let p = SecularProblem::new(vec![0.0, 1.0], vec![1.0, 1.0], 0.0).unwrap();
        assert!(matches!(solve_secular(&p), Err(Error::Precondition(_))));
    }
}
