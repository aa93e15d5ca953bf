//! Dense row-major matrices and rectangular diagonal factors.
//!
//! Everything in this crate works on `f64`. The matrix type is deliberately
//! small: owned storage, explicit shapes, and the handful of products the
//! updating algorithm needs. No views, no generics.

use crate::error::{Error, Result};

/// Returns an error if any entry of `data` is NaN or infinite.
pub(crate) fn check_finite(data: &[f64]) -> Result<()> {
    if data.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Dense row-major matrix with `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps `data` (row-major, length `rows * cols`) as a matrix.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch("data length vs rows * cols"));
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    /// All-zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Square identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix entry by entry from `f(i, j)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major backing slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    /// Borrow row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copies column `j` into a new vector.
    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        debug_assert_eq!(v.len(), self.rows);
        for (i, &x) in v.iter().enumerate() {
            self.set(i, j, x);
        }
    }

    /// `self * x` for a vector `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch("matvec operand length"));
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// `self^T * x` for a vector `x` of length `rows`.
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch("tr_matvec operand length"));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            let row = self.row(i);
            for (o, a) in out.iter_mut().zip(row) {
                *o += xi * a;
            }
        }
        Ok(out)
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch("matmul inner dimensions"));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let trg = out.row_mut(i);
                for (t, &b) in trg.iter_mut().zip(orow) {
                    *t += aik * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * other`.
    pub fn tr_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch("tr_matmul inner dimensions"));
        }
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = other.row(k);
            for i in 0..self.cols {
                let aki = arow[i];
                if aki == 0.0 {
                    continue;
                }
                let trg = out.row_mut(i);
                for (t, &b) in trg.iter_mut().zip(brow) {
                    *t += aki * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T`.
    pub fn matmul_trb(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch("matmul_trb inner dimensions"));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let arow = self.row(i);
            for j in 0..other.rows {
                let brow = other.row(j);
                let mut acc = 0.0;
                for (a, b) in arow.iter().zip(brow) {
                    acc += a * b;
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Largest entry magnitude; 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Scales column `j` by `s[j]` in place. `s` must have `cols` entries.
    pub fn scale_cols(&mut self, s: &[f64]) {
        debug_assert_eq!(s.len(), self.cols);
        for i in 0..self.rows {
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (x, &f) in row.iter_mut().zip(s) {
                *x *= f;
            }
        }
    }
}

/// Rectangular diagonal factor: an `rows x cols` matrix whose only nonzero
/// entries sit on the main diagonal. Stores the `min(rows, cols)` diagonal
/// values, which must be finite and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagRect {
    rows: usize,
    cols: usize,
    diag: Vec<f64>,
}

impl DiagRect {
    pub fn new(rows: usize, cols: usize, diag: Vec<f64>) -> Result<Self> {
        if diag.len() != rows.min(cols) {
            return Err(Error::DimensionMismatch("diagonal length vs min(rows, cols)"));
        }
        check_finite(&diag)?;
        if let Some((i, &v)) = diag.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeDiagonal { index: i, value: v });
        }
        Ok(Self { rows, cols, diag })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `self * x` for `x` of length `cols`; result has length `rows`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch("diag matvec operand length"));
        }
        let mut out = vec![0.0; self.rows];
        for (i, &d) in self.diag.iter().enumerate() {
            out[i] = d * x[i];
        }
        Ok(out)
    }

    /// `self^T * x` for `x` of length `rows`; result has length `cols`.
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch("diag tr_matvec operand length"));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &d) in self.diag.iter().enumerate() {
            out[i] = d * x[i];
        }
        Ok(out)
    }

    /// Materializes the full rectangular matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for (i, &d) in self.diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }
}

/// Largest entry magnitude of `M^T M - I`, the departure of `M`'s columns
/// from orthonormality. An empty matrix has defect 0.
pub fn orthogonality_defect(m: &DenseMatrix) -> f64 {
    let k = m.cols();
    let mut worst = 0.0f64;
    for i in 0..k {
        let ci = m.col(i);
        for j in i..k {
            let cj = m.col(j);
            let mut dot = 0.0;
            for (a, b) in ci.iter().zip(&cj) {
                dot += a * b;
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_bad_length_and_nonfinite() {
        assert_eq!(
            DenseMatrix::new(2, 2, vec![1.0; 3]).unwrap_err(),
            Error::DimensionMismatch("data length vs rows * cols")
        );
        assert_eq!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).unwrap_err(),
            Error::NonFinite
        );
    }

    #[test]
    fn products_match_hand_values() {
        let a = DenseMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let x = [1.0, 0.0, -1.0];
        assert_eq!(a.matvec(&x).unwrap(), vec![-2.0, -2.0]);
        let y = [1.0, 1.0];
        assert_eq!(a.tr_matvec(&y).unwrap(), vec![5.0, 7.0, 9.0]);

        let b = a.transpose();
        let ab = a.matmul(&b).unwrap();
        // Gram matrix of the two rows.
        assert_eq!(ab.as_slice(), &[14.0, 32.0, 32.0, 77.0]);
        let ata = a.tr_matmul(&a).unwrap();
        let ata_ref = b.matmul(&a).unwrap();
        assert_eq!(ata, ata_ref);
        let abt = a.matmul_trb(&a).unwrap();
        assert_eq!(abt, ab);
    }

    #[test]
    fn diag_rect_shapes_and_products() {
        // 2x3 diagonal: maps (x0, x1, x2) to (d0 x0, d1 x1).
        let s = DiagRect::new(2, 3, vec![3.0, 4.0]).unwrap();
        assert_eq!(s.matvec(&[1.0, 1.0, 1.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(s.tr_matvec(&[1.0, 1.0]).unwrap(), vec![3.0, 4.0, 0.0]);
        let d = s.to_dense();
        assert_eq!(d.as_slice(), &[3.0, 0.0, 0.0, 0.0, 4.0, 0.0]);

        assert_eq!(
            DiagRect::new(2, 2, vec![1.0, -0.5]).unwrap_err(),
            Error::NegativeDiagonal { index: 1, value: -0.5 }
        );
    }

    #[test]
    fn defect_of_scaled_identity() {
        // diag(2, 1): Gram is diag(4, 1), so the defect is 3.
        let m = DenseMatrix::new(2, 2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(orthogonality_defect(&m), 3.0);
        assert_eq!(orthogonality_defect(&DenseMatrix::identity(5)), 0.0);
    }
}
