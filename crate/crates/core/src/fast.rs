//! Polynomial-arithmetic backend for Trummer's problem.
//!
//! Writes f(x) = sum_j u_j/(lambda_j - x) as a ratio h(x)/g(x) of two
//! polynomials, where g(x) = prod_j (lambda_j - x) and h = g*f is the unique
//! polynomial of degree < n through the points (lambda_j, h_j) with
//! h_j = -u_j * g'(lambda_j). Evaluating f at all mu_i then reduces to
//! polynomial primitives: forming g, differentiating it, interpolating h,
//! and evaluating the ratio at the targets.
//!
//! Two representations appear here. The monomial primitives
//! ([`poly_product_tree`], [`poly_derivative`], [`multipoint_eval`],
//! [`interpolate`]) implement the pipeline literally, but expanded
//! coefficients of node polynomials over spread nodes grow exponentially
//! with the degree while the values between nodes stay bounded, so Horner
//! evaluation cancels roughly half a digit per pole; by n = 32 the expanded
//! route carries no digits at all. [`fast_matvec`] therefore evaluates the
//! same g, g', and h in factored and Newton form, which is as stable as this
//! factorization gets. Even then, h itself swings through exponentially
//! large values between its interpolation nodes, so the matvec keeps near
//! machine accuracy only up to n of about 10 and loses ground exponentially
//! beyond that (see the module tests, which pin the measured envelope).
//! Inputs are affinely rescaled into [-1, 1] before any arithmetic and the
//! backend is capped at [`MAX_FAST_SIZE`] poles. The multipole backend is
//! the production path at every size; this one is the small-size
//! cross-check.

use crate::cauchy::check_collisions;
use crate::error::{Error, Result};
use crate::matrix::check_finite;
use rustfft::{num_complex::Complex, FftPlanner};

/// Largest pole count the polynomial backend accepts.
pub const MAX_FAST_SIZE: usize = 512;

/// Product degree at and above which multiplication switches to FFT
/// convolution.
const FFT_DEGREE_CUTOFF: usize = 32;

/// Dense polynomial in the monomial basis; `coeffs[k]` multiplies x^k.
///
/// Invariant: the trailing coefficient is nonzero unless this is the zero
/// polynomial, stored as `[0.0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    /// Builds a polynomial, trimming trailing zero coefficients.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn one() -> Self {
        Self { coeffs: vec![1.0] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation, fixed summation order.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

fn mul_schoolbook(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn mul_fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(n, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fb.resize(n, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    fa[..out_len].iter().map(|c| c.re * scale).collect()
}

fn poly_mul(a: &Poly, b: &Poly, allow_fft: bool) -> Poly {
    let coeffs = if allow_fft && a.degree() + b.degree() >= FFT_DEGREE_CUTOFF {
        mul_fft(&a.coeffs, &b.coeffs)
    } else {
        mul_schoolbook(&a.coeffs, &b.coeffs)
    };
    Poly::new(coeffs)
}

fn product_tree_impl(lambda: &[f64], allow_fft: bool) -> Poly {
    if lambda.is_empty() {
        return Poly::one();
    }
    // Leaves are the linear factors (lambda_j - x); reduce adjacent pairs
    // until one polynomial remains, keeping the tree balanced.
    let mut level: Vec<Poly> = lambda.iter().map(|&l| Poly::new(vec![l, -1.0])).collect();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.chunks(2);
        for pair in &mut it {
            match pair {
                [a, b] => next.push(poly_mul(a, b, allow_fft)),
                [a] => next.push(a.clone()),
                _ => unreachable!(),
            }
        }
        level = next;
    }
    level.pop().unwrap()
}

/// Coefficients of g(x) = prod_j (lambda_j - x), built by balanced pairwise
/// multiplication. Subproducts of degree >= 32 go through FFT convolution,
/// smaller ones through the schoolbook loop. The empty product is 1.
pub fn poly_product_tree(lambda: &[f64]) -> Poly {
    product_tree_impl(lambda, true)
}

/// Same tree with every multiplication forced through the schoolbook loop;
/// reference for validating the FFT path.
pub fn poly_product_tree_schoolbook(lambda: &[f64]) -> Poly {
    product_tree_impl(lambda, false)
}

/// Power-rule derivative.
pub fn poly_derivative(g: &Poly) -> Poly {
    if g.coeffs.len() == 1 {
        return Poly::new(vec![0.0]);
    }
    let coeffs = g
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect();
    Poly::new(coeffs)
}

/// Evaluates g at each point by Horner's rule (O(deg) per point).
pub fn multipoint_eval(g: &Poly, points: &[f64]) -> Vec<f64> {
    points.iter().map(|&x| g.eval(x)).collect()
}

/// Greedy ordering for divided differences: start at the node of largest
/// magnitude, then repeatedly append the node whose product of distances to
/// the already chosen ones is largest (tracked as a running sum of
/// log-distances). This Leja ordering keeps the growth factors of the
/// difference table close to optimal; ascending order can be orders of
/// magnitude worse for spread nodes.
fn leja_order(xs: &[f64]) -> Vec<usize> {
    let k = xs.len();
    let mut order = Vec::with_capacity(k);
    let mut used = vec![false; k];
    let mut first = 0;
    for i in 1..k {
        if xs[i].abs() > xs[first].abs() {
            first = i;
        }
    }
    order.push(first);
    used[first] = true;
    let mut score = vec![0.0f64; k];
    for _ in 1..k {
        let last = *order.last().unwrap();
        let mut best = None;
        for i in 0..k {
            if used[i] {
                continue;
            }
            score[i] += (xs[i] - xs[last]).abs().ln();
            match best {
                Some(b) if score[i] <= score[b] => {}
                _ => best = Some(i),
            }
        }
        let b = best.unwrap();
        order.push(b);
        used[b] = true;
    }
    order
}

/// Interpolating polynomial kept in Newton form on its own nodes.
///
/// Evaluation nests the divided-difference coefficients directly and never
/// forms monomial coefficients. That matters: at the nodes themselves the
/// unstable high-order tail is annihilated exactly by the (x - node)
/// factors, so values round-trip at machine precision even at degree 63 and
/// with node gaps down to 1e-12, where the expanded representation from
/// [`interpolate`] has long lost every digit.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonInterpolant {
    nodes: Vec<f64>,
    coeffs: Vec<f64>,
}

impl NewtonInterpolant {
    /// Nodes in evaluation order (a Leja reordering of the input nodes).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Divided differences of the data over leading prefixes of `nodes`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Nested evaluation of c[0] + (x-n[0])*(c[1] + (x-n[1])*(...)).
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.coeffs.len();
        let mut acc = self.coeffs[k - 1];
        for j in (0..k - 1).rev() {
            acc = self.coeffs[j] + (x - self.nodes[j]) * acc;
        }
        acc
    }
}

/// Newton divided-difference interpolant through the points (xs[i], ys[i]).
///
/// The nodes are Leja-ordered before the difference table is built. Nodes
/// and values must have equal nonzero length, be finite, and the nodes must
/// be pairwise distinct.
pub fn newton_interpolate(xs: &[f64], ys: &[f64]) -> Result<NewtonInterpolant> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch("interpolation nodes vs values"));
    }
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_finite(xs)?;
    check_finite(ys)?;
    let k = xs.len();

    let mut sorted: Vec<usize> = (0..k).collect();
    sorted.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    for w in sorted.windows(2) {
        if xs[w[0]] == xs[w[1]] {
            return Err(Error::DuplicateNode { index: w[0].max(w[1]) });
        }
    }

    let order = leja_order(xs);
    let nodes: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    // Divided-difference table, in place: coeffs[i] becomes f[n_{i-j}..n_i].
    let mut coeffs: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
    for j in 1..k {
        for i in (j..k).rev() {
            coeffs[i] = (coeffs[i] - coeffs[i - 1]) / (nodes[i] - nodes[i - j]);
        }
    }
    Ok(NewtonInterpolant { nodes, coeffs })
}

/// Unique polynomial of degree <= k-1 through the points (xs[i], ys[i]),
/// via Newton divided differences expanded to the monomial basis.
///
/// The expansion is the lossy step: monomial coefficients of interpolants
/// over k spread nodes amplify roundoff from the difference table by a
/// factor that grows exponentially in k, so expect full accuracy only up to
/// k of about 14 for generic data (see the round-trip tests). When only
/// values of the interpolant are needed, [`newton_interpolate`] avoids the
/// expansion entirely and stays accurate to degree 63.
pub fn interpolate(xs: &[f64], ys: &[f64]) -> Result<Poly> {
    let ni = newton_interpolate(xs, ys)?;
    let k = ni.coeffs.len();
    // Expand the Newton form from the innermost coefficient out:
    // p <- p*(x - nodes[j]) + coeffs[j].
    let mut poly = vec![ni.coeffs[k - 1]];
    for j in (0..k - 1).rev() {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= ni.nodes[j] * c;
        }
        next[0] += ni.coeffs[j];
        poly = next;
    }
    Ok(Poly::new(poly))
}

/// Evaluates f(mu_i) = sum_j u[j]/(lambda[j] - mu_i) through the h/g ratio.
///
/// All nodes are affinely mapped into [-1, 1] before any arithmetic (the
/// kernel is equivariant under affine maps up to a scalar), and h carries
/// the corrected sign h_j = -u[j]*g'(lambda_j), consistent with
/// g'(lambda_j) = -prod_{k!=j}(lambda_k - lambda_j).
///
/// g'(lambda_j) and g(mu_i) are evaluated as direct products of the linear
/// factors and h is evaluated in Newton form, never through expanded
/// monomial coefficients: the expanded route (exposed as
/// [`poly_product_tree`] + [`interpolate`] + [`multipoint_eval`]) loses
/// roughly half a digit per pole and returns garbage by n = 32, while the
/// factored route has the same O(n^2) cost and keeps the error down to what
/// the h/g factorization itself admits. That intrinsic limit is still
/// exponential in n, because h varies across its nodes by a factor that
/// outgrows its value between them; the cross-check tests below pin the
/// measured envelope.
pub fn fast_matvec(lambda: &[f64], mu: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != lambda.len() {
        return Err(Error::DimensionMismatch("charge vector vs poles length"));
    }
    check_finite(lambda)?;
    check_finite(mu)?;
    check_finite(u)?;
    if lambda.len() > MAX_FAST_SIZE {
        return Err(Error::UnsupportedSize { size: lambda.len(), max: MAX_FAST_SIZE });
    }
    if mu.is_empty() {
        return Ok(Vec::new());
    }
    if lambda.is_empty() {
        return Ok(vec![0.0; mu.len()]);
    }
    check_collisions(lambda, mu)?;

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in lambda.iter().chain(mu) {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    // x' = (2x - shift)/scale maps [lo, hi] onto [-1, 1]; the kernel picks up
    // the factor alpha = 2/scale: 1/(x - y) = alpha/(x' - y').
    let (shift, scale) = if hi > lo { (lo + hi, hi - lo) } else { (2.0 * lo, 1.0) };
    let lam2: Vec<f64> = lambda.iter().map(|&x| (2.0 * x - shift) / scale).collect();
    let mu2: Vec<f64> = mu.iter().map(|&x| (2.0 * x - shift) / scale).collect();
    let alpha = 2.0 / scale;

    // h_j = -u_j*g'(lambda_j) = u_j * prod_{k!=j}(lambda_k - lambda_j),
    // formed as running products per node.
    let n = lam2.len();
    let mut h_vals = Vec::with_capacity(n);
    for j in 0..n {
        let mut prod = u[j];
        for k in 0..n {
            if k != j {
                prod *= lam2[k] - lam2[j];
            }
        }
        h_vals.push(prod);
    }
    let h = newton_interpolate(&lam2, &h_vals)?;

    let mut out = Vec::with_capacity(mu.len());
    for i in 0..mu.len() {
        let mut g_at_mu = 1.0f64;
        for &l in &lam2 {
            g_at_mu *= l - mu2[i];
        }
        let v = alpha * h.eval(mu2[i]) / g_at_mu;
        if !v.is_finite() {
            // g(mu_i) underflowed to zero: mu_i is numerically a root of g,
            // i.e. it sits on some pole. Report the nearest one.
            let source = lambda
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| (*a - mu[i]).abs().total_cmp(&(*b - mu[i]).abs()))
                .map(|(j, _)| j)
                .unwrap_or(0);
            return Err(Error::PoleCollision { source, target: i });
        }
        out.push(v);
    }
    Ok(out)
}
