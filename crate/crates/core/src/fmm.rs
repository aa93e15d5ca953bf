//! One-dimensional fast multipole evaluation of f(y) = sum_k alpha_k/(y - x_k).
//!
//! Sources and targets share a uniform binary tree over their common
//! interval. Each cell carries two order-p Chebyshev interpolants: a
//! far-field expansion Phi (valid for evaluation points at least one cell
//! width away) and a local expansion Psi (the field of all well-separated
//! sources, valid inside the cell). One upward pass merges child far fields
//! into parents, one downward pass translates far fields into local ones,
//! and each target then reads its leaf's Psi plus a direct sum over the
//! three nearest leaves. Total work is O((N+M)p) for accuracy ~5^-p.
//!
//! Conventions, fixed once here and used consistently:
//! * far-field variable s = 3r/(y - x0) for a cell with center x0 and
//!   half-width r, so the expansion is valid whenever |y - x0| >= 3r and
//!   interaction-list arguments stay inside [-1, 1];
//! * local variable t = (y - x0)/r;
//! * expansions store function values on the Chebyshev grid (cardinal
//!   basis), so every translation matrix is a resampling of basis
//!   functions at mapped node positions.
//!
//! Under these conventions the child-to-parent shift evaluates the child
//! expansion at s_child = 3t/(6 +- t) (left/right child at a parent node t),
//! the parent-to-child local shift at t_child = (t -+ 1)/2, and the
//! far-to-local translation between same-level cells offset by o cells at
//! s = 3/(t - 2o), o in {-3, -2, +2, +3}.

use crate::cauchy::separated;
use crate::error::{Error, Result};
use crate::matrix::{check_finite, DenseMatrix};
use rayon::prelude::*;

/// Expansion order needed for far-field truncation error epsilon:
/// p = ceil(log5(1/epsilon)), at least 1. The tiny slack keeps exact powers
/// of five (epsilon = 5^-p) from rounding up to p+1.
pub fn order_for_epsilon(epsilon: f64) -> Result<usize> {
    if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let p = ((1.0 / epsilon).ln() / 5f64.ln() - 1e-9).ceil();
    Ok((p as usize).max(1))
}

/// Chebyshev interpolation grid on [-1, 1] with its barycentric weights.
///
/// Nodes are the first-kind points t_i = cos((2i-1)pi/(2p)), i = 1..p,
/// strictly decreasing in (-1, 1). The cardinal basis u_j (u_j(t_k) =
/// delta_jk) is evaluated in barycentric form, which makes the partition of
/// unity sum u_j(t) = 1 hold identically.
#[derive(Debug, Clone)]
pub struct ChebyshevGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Builds the order-p grid.
pub fn chebyshev_grid(p: usize) -> Result<ChebyshevGrid> {
    if p < 1 {
        return Err(Error::InvalidOrder(p));
    }
    let mut nodes = Vec::with_capacity(p);
    let mut weights = Vec::with_capacity(p);
    for i in 0..p {
        let theta = (2 * i + 1) as f64 * std::f64::consts::PI / (2 * p) as f64;
        nodes.push(theta.cos());
        // Barycentric weights for first-kind points, up to a common factor:
        // w_i = (-1)^i sin(theta_i).
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        weights.push(sign * theta.sin());
    }
    Ok(ChebyshevGrid { nodes, weights })
}

impl ChebyshevGrid {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Writes u_j(t) for all j into `out`.
    pub fn basis_at(&self, t: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.nodes.len());
        // An exact node hit makes the barycentric form 0/0; the limit is the
        // Kronecker delta.
        for (j, &tj) in self.nodes.iter().enumerate() {
            if t == tj {
                out.fill(0.0);
                out[j] = 1.0;
                return;
            }
        }
        let mut denom = 0.0;
        for (o, (&tj, &wj)) in out.iter_mut().zip(self.nodes.iter().zip(&self.weights)) {
            let term = wj / (t - tj);
            *o = term;
            denom += term;
        }
        for o in out.iter_mut() {
            *o /= denom;
        }
    }

    /// Matrix whose row i is the basis evaluated at args[i].
    fn resampling_matrix(&self, args: &[f64]) -> DenseMatrix {
        let p = self.order();
        let mut m = DenseMatrix::zeros(args.len(), p);
        let mut row = vec![0.0; p];
        for (i, &t) in args.iter().enumerate() {
            self.basis_at(t, &mut row);
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }
}

/// Immutable geometry + precomputed translation operators for one
/// source/target configuration. Built once, shared across evaluations
/// (and across threads) with different charge vectors.
#[derive(Debug, Clone)]
pub struct FmmPlan {
    grid: ChebyshevGrid,
    pub p: usize,
    pub s: usize,
    pub nlevs: usize,
    root_lo: f64,
    root_hi: f64,
    sources: Vec<f64>,
    targets: Vec<f64>,
    /// Source indices sorted by coordinate, and per-leaf (start, end) ranges
    /// into that ordering. Same layout for targets.
    src_order: Vec<usize>,
    src_leaf: Vec<(usize, usize)>,
    tgt_order: Vec<usize>,
    tgt_leaf: Vec<(usize, usize)>,
    /// Targets outside the source hull. They never enter the tree; each one
    /// is summed directly over all sources, which stays cheap because such
    /// points are rare (a secular system puts at most one root beyond its
    /// poles). Folding them into the hull instead would stretch the uniform
    /// grid until every interior point crowded into one leaf and the near
    /// field degenerated to all-pairs work.
    tgt_outliers: Vec<usize>,
    ml: DenseMatrix,
    mr: DenseMatrix,
    sl: DenseMatrix,
    sr: DenseMatrix,
    /// Far-to-local translations by source-cell offset o = j_source - j_target.
    t_m3: DenseMatrix,
    t_m2: DenseMatrix,
    t_p2: DenseMatrix,
    t_p3: DenseMatrix,
}

/// Per-evaluation expansion storage: phi[l] and psi[l] hold the level-l
/// cells' order-p vectors back to back (cell i occupies i*p..(i+1)*p).
#[derive(Debug, Clone)]
pub struct ExpansionSet {
    pub phi: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
}

impl ExpansionSet {
    fn zeros(nlevs: usize, p: usize) -> Self {
        let make = || (0..=nlevs).map(|l| vec![0.0; (1usize << l) * p]).collect::<Vec<_>>();
        Self { phi: make(), psi: make() }
    }

    /// Far-field vector of cell i at level l.
    pub fn phi_cell(&self, level: usize, i: usize) -> &[f64] {
        let p = self.phi[level].len() >> level;
        &self.phi[level][i * p..(i + 1) * p]
    }

    /// Local vector of cell i at level l.
    pub fn psi_cell(&self, level: usize, i: usize) -> &[f64] {
        let p = self.psi[level].len() >> level;
        &self.psi[level][i * p..(i + 1) * p]
    }
}

/// y += m * x for the small dense translation operators.
fn accumulate_product(m: &DenseMatrix, x: &[f64], y: &mut [f64]) {
    for (i, yi) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (a, b) in m.row(i).iter().zip(x) {
            acc += a * b;
        }
        *yi += acc;
    }
}

/// Sizes the tree and precomputes every translation operator.
///
/// p = ceil(log5(1/epsilon)), leaf capacity s = 2p, depth nlevs =
/// max(0, ceil(log2(N/s))) with N the source count. The root interval is
/// the hull of the sources widened by a 1e-12 relative margin so the
/// extreme sources land strictly inside the outermost cells; targets
/// outside that interval are set aside for exact direct summation rather
/// than allowed to stretch the grid.
pub fn build_plan(sources: &[f64], targets: &[f64], epsilon: f64) -> Result<FmmPlan> {
    let p = order_for_epsilon(epsilon)?;
    if sources.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_finite(sources)?;
    check_finite(targets)?;

    let s = 2 * p;
    let mut nlevs = 0usize;
    while sources.len() > s << nlevs {
        nlevs += 1;
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in sources {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let scale = (hi - lo).max(lo.abs()).max(hi.abs()).max(1.0);
    let root_lo = lo - 1e-12 * scale;
    let root_hi = hi + 1e-12 * scale;

    let ncells = 1usize << nlevs;
    let width = (root_hi - root_lo) / ncells as f64;
    let bucket = |pts: &[f64], mut order: Vec<usize>| -> (Vec<usize>, Vec<(usize, usize)>) {
        order.sort_by(|&a, &b| pts[a].total_cmp(&pts[b]));
        let mut ranges = vec![(0usize, 0usize); ncells];
        let mut start = 0;
        for cell in 0..ncells {
            let cell_hi = root_lo + (cell + 1) as f64 * width;
            let mut end = start;
            while end < order.len() && (pts[order[end]] < cell_hi || cell == ncells - 1) {
                end += 1;
            }
            ranges[cell] = (start, end);
            start = end;
        }
        (order, ranges)
    };
    let (src_order, src_leaf) = bucket(sources, (0..sources.len()).collect());
    let mut tgt_in = Vec::new();
    let mut tgt_outliers = Vec::new();
    for (i, &y) in targets.iter().enumerate() {
        if (root_lo..=root_hi).contains(&y) {
            tgt_in.push(i);
        } else {
            tgt_outliers.push(i);
        }
    }
    let (tgt_order, tgt_leaf) = bucket(targets, tgt_in);

    let grid = chebyshev_grid(p)?;
    let t = grid.nodes().to_vec();
    let map = |f: &dyn Fn(f64) -> f64| -> Vec<f64> { t.iter().map(|&ti| f(ti)).collect() };
    let ml = grid.resampling_matrix(&map(&|ti| 3.0 * ti / (6.0 + ti)));
    let mr = grid.resampling_matrix(&map(&|ti| 3.0 * ti / (6.0 - ti)));
    let sl = grid.resampling_matrix(&map(&|ti| (ti - 1.0) / 2.0));
    let sr = grid.resampling_matrix(&map(&|ti| (ti + 1.0) / 2.0));
    let t_for = |o: f64| grid.resampling_matrix(&map(&|ti| 3.0 / (ti - 2.0 * o)));
    let t_m3 = t_for(-3.0);
    let t_m2 = t_for(-2.0);
    let t_p2 = t_for(2.0);
    let t_p3 = t_for(3.0);

    Ok(FmmPlan {
        grid,
        p,
        s,
        nlevs,
        root_lo,
        root_hi,
        sources: sources.to_vec(),
        targets: targets.to_vec(),
        src_order,
        src_leaf,
        tgt_order,
        tgt_leaf,
        tgt_outliers,
        ml,
        mr,
        sl,
        sr,
        t_m3,
        t_m2,
        t_p2,
        t_p3,
    })
}

impl FmmPlan {
    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    /// Center and half-width of cell i at the given level.
    pub fn cell_interval(&self, level: usize, i: usize) -> (f64, f64) {
        let width = (self.root_hi - self.root_lo) / (1u64 << level) as f64;
        (self.root_lo + (i as f64 + 0.5) * width, width / 2.0)
    }
}

/// Seeds the leaf-level far-field expansions:
/// Phi_leaf(i)[k] = sum over sources x_j in cell i of
/// alpha_j * t_k / (3r - t_k (x_j - x0)).
pub fn leaf_far_field(plan: &FmmPlan, alpha: &[f64]) -> Result<ExpansionSet> {
    if alpha.len() != plan.sources.len() {
        return Err(Error::DimensionMismatch("charge vector vs plan sources"));
    }
    check_finite(alpha)?;
    let p = plan.p;
    let mut exp = ExpansionSet::zeros(plan.nlevs, p);
    let leaf = plan.nlevs;
    for (cell, &(start, end)) in plan.src_leaf.iter().enumerate() {
        if start == end {
            continue;
        }
        let (x0, r) = plan.cell_interval(leaf, cell);
        let phi = &mut exp.phi[leaf][cell * p..(cell + 1) * p];
        for &src_pos in &plan.src_order[start..end] {
            let a = alpha[src_pos];
            let dx = plan.sources[src_pos] - x0;
            for (k, &tk) in plan.grid.nodes().iter().enumerate() {
                phi[k] += a * tk / (3.0 * r - tk * dx);
            }
        }
    }
    Ok(exp)
}

/// Merges child far fields into parents, levels nlevs-1 down to 2:
/// Phi_{l,i} = ML * Phi_{l+1,2i} + MR * Phi_{l+1,2i+1}.
pub fn upward_pass(plan: &FmmPlan, exp: &mut ExpansionSet) {
    let p = plan.p;
    for l in (2..plan.nlevs).rev() {
        for i in 0..(1usize << l) {
            let (left, right) = {
                let child = &exp.phi[l + 1];
                (
                    child[(2 * i) * p..(2 * i + 1) * p].to_vec(),
                    child[(2 * i + 1) * p..(2 * i + 2) * p].to_vec(),
                )
            };
            let parent = &mut exp.phi[l][i * p..(i + 1) * p];
            accumulate_product(&plan.ml, &left, parent);
            accumulate_product(&plan.mr, &right, parent);
        }
    }
}

/// Builds the local expansions by recursing from the top: each child
/// inherits its parent's local field (S-shift) plus the far fields of the
/// same-level cells that just became well separated (T-translations).
/// Cells outside the level's index range contribute zero. Starting the
/// recursion with a zero local field at level 1 reproduces the standard
/// level-2 initialization: Psi_{2,q} = sum over |j-q| >= 2 of T * Phi_{2,j}.
pub fn downward_pass(plan: &FmmPlan, exp: &mut ExpansionSet) {
    let p = plan.p;
    for l in 1..plan.nlevs {
        let ncells_child = 1usize << (l + 1);
        let mut new_psi = vec![0.0; ncells_child * p];
        for i in 0..(1usize << l) {
            let parent_psi = exp.psi[l][i * p..(i + 1) * p].to_vec();
            for (side, q) in [(0usize, 2 * i), (1usize, 2 * i + 1)] {
                let out = &mut new_psi[q * p..(q + 1) * p];
                let shift = if side == 0 { &plan.sl } else { &plan.sr };
                accumulate_product(shift, &parent_psi, out);
                let offsets: [(isize, &DenseMatrix); 3] = if side == 0 {
                    [(-2, &plan.t_m2), (2, &plan.t_p2), (3, &plan.t_p3)]
                } else {
                    [(-3, &plan.t_m3), (-2, &plan.t_m2), (2, &plan.t_p2)]
                };
                for (o, t_mat) in offsets {
                    let j = q as isize + o;
                    if j < 0 || j >= ncells_child as isize {
                        continue;
                    }
                    let j = j as usize;
                    let phi_j = &exp.phi[l + 1][j * p..(j + 1) * p];
                    accumulate_product(t_mat, phi_j, out);
                }
            }
        }
        exp.psi[l + 1] = new_psi;
    }
}

/// Exact summation of one target against every source.
fn direct_sum(plan: &FmmPlan, alpha: &[f64], tgt_pos: usize) -> Result<f64> {
    let y = plan.targets[tgt_pos];
    let mut acc = 0.0;
    for &src_pos in &plan.src_order {
        let x = plan.sources[src_pos];
        if !separated(x, y) {
            return Err(Error::PoleCollision { source: src_pos, target: tgt_pos });
        }
        acc += alpha[src_pos] / (y - x);
    }
    Ok(acc)
}

/// Direct summation fallback used when the tree is too shallow for any
/// well-separated pair to exist.
fn evaluate_direct(plan: &FmmPlan, alpha: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; plan.targets.len()];
    for tgt_pos in 0..plan.targets.len() {
        out[tgt_pos] = direct_sum(plan, alpha, tgt_pos)?;
    }
    Ok(out)
}

/// Evaluates f(y_j) = sum_k alpha_k/(y_j - x_k) at every plan target.
///
/// Far contributions come from the target leaf's local expansion, near ones
/// (the leaf and its two neighbors) from direct summation; the two-level
/// shallow case degenerates to all-direct, and targets outside the source
/// hull are summed directly and exactly. Near-field pairs closer than the
/// machine spacing at their magnitude raise `PoleCollision` with the
/// original source/target indices.
pub fn fmm_evaluate(plan: &FmmPlan, alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.len() != plan.sources.len() {
        return Err(Error::DimensionMismatch("charge vector vs plan sources"));
    }
    check_finite(alpha)?;
    if plan.targets.is_empty() {
        return Ok(Vec::new());
    }
    if plan.nlevs < 2 {
        return evaluate_direct(plan, alpha);
    }

    let mut exp = leaf_far_field(plan, alpha)?;
    upward_pass(plan, &mut exp);
    downward_pass(plan, &mut exp);

    let p = plan.p;
    let leaf = plan.nlevs;
    let ncells = 1usize << leaf;
    let mut out = vec![0.0; plan.targets.len()];
    let mut basis = vec![0.0; p];
    for cell in 0..ncells {
        let (start, end) = plan.tgt_leaf[cell];
        if start == end {
            continue;
        }
        let (y0, r) = plan.cell_interval(leaf, cell);
        let psi = exp.psi_cell(leaf, cell);
        for &tgt_pos in &plan.tgt_order[start..end] {
            let y = plan.targets[tgt_pos];
            plan.grid.basis_at((y - y0) / r, &mut basis);
            let mut acc = 0.0;
            for (c, b) in psi.iter().zip(&basis) {
                acc += c * b;
            }
            for near in cell.saturating_sub(1)..=(cell + 1).min(ncells - 1) {
                let (ns, ne) = plan.src_leaf[near];
                for &src_pos in &plan.src_order[ns..ne] {
                    let x = plan.sources[src_pos];
                    if !separated(x, y) {
                        return Err(Error::PoleCollision { source: src_pos, target: tgt_pos });
                    }
                    acc += alpha[src_pos] / (y - x);
                }
            }
            out[tgt_pos] = acc;
        }
    }
    for &tgt_pos in &plan.tgt_outliers {
        out[tgt_pos] = direct_sum(plan, alpha, tgt_pos)?;
    }
    Ok(out)
}

/// Row-wise Cauchy product through the multipole machinery: row r of the
/// output is sum_j u1[r][j]/(lambda_j - mu_i), i.e. the same orientation as
/// [`crate::cauchy::cauchy_matvec_naive`] (charges are negated internally
/// because the kernel here is 1/(y - x)). One plan is shared by all rows;
/// rows may evaluate in parallel.
pub fn fmm_matvec(
    lambda: &[f64],
    mu: &[f64],
    u1: &DenseMatrix,
    epsilon: f64,
) -> Result<DenseMatrix> {
    if u1.cols() != lambda.len() {
        return Err(Error::DimensionMismatch("matrix columns vs poles length"));
    }
    let plan = build_plan(lambda, mu, epsilon)?;
    let rows: Vec<Vec<f64>> = (0..u1.rows())
        .into_par_iter()
        .map(|r| {
            let charges: Vec<f64> = u1.row(r).iter().map(|&v| -v).collect();
            fmm_evaluate(&plan, &charges)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = DenseMatrix::zeros(u1.rows(), mu.len());
    for (r, vals) in rows.iter().enumerate() {
        for (i, &v) in vals.iter().enumerate() {
            out.set(r, i, v);
        }
    }
    Ok(out)
}
