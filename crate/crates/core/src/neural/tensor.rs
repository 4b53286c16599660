//! Minimal dense row-major matrix and the few vector kernels the
//! forward/backward passes need. No BLAS, no views; the networks here are
//! tiny and the hot loops are written so LLVM can keep them in registers.

use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    /// out = self · x
    pub fn matvec(&self, x: &[F], out: &mut [F]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
    }

    /// out += self · x
    pub fn matvec_add(&self, x: &[F], out: &mut [F]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o += dot(row, x);
        }
    }

    /// out += selfᵀ · y
    pub fn matvec_t_add(&self, y: &[F], out: &mut [F]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (row, &yi) in self.data.chunks_exact(self.cols).zip(y.iter()) {
            for (o, &a) in out.iter_mut().zip(row.iter()) {
                *o += a * yi;
            }
        }
    }

    /// self += y · xᵀ (rank-one update, used for weight gradients)
    pub fn add_outer(&mut self, y: &[F], x: &[F]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (row, &yi) in self.data.chunks_exact_mut(self.cols).zip(y.iter()) {
            for (o, &xi) in row.iter_mut().zip(x.iter()) {
                *o += yi * xi;
            }
        }
    }
}

/// Dot product with four independent accumulators; the dependency chains
/// would otherwise serialize on FP add latency. Summation order is fixed,
/// so results are reproducible run to run.
pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc0 = F::zero();
    let mut acc1 = F::zero();
    let mut acc2 = F::zero();
    let mut acc3 = F::zero();
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (pa, pb) in (&mut ca).zip(&mut cb) {
        acc0 = acc0 + pa[0] * pb[0];
        acc1 = acc1 + pa[1] * pb[1];
        acc2 = acc2 + pa[2] * pb[2];
        acc3 = acc3 + pa[3] * pb[3];
    }
    let mut s = (acc0 + acc1) + (acc2 + acc3);
    for (&pa, &pb) in ca.remainder().iter().zip(cb.remainder()) {
        s = s + pa * pb;
    }
    s
}

/// out += x element-wise
pub fn add_assign<F: Scalar>(out: &mut [F], x: &[F]) {
    debug_assert_eq!(out.len(), x.len());
    for (o, &v) in out.iter_mut().zip(x.iter()) {
        *o += v;
    }
}

/// out += s · x
pub fn add_scaled<F: Scalar>(out: &mut [F], x: &[F], s: F) {
    debug_assert_eq!(out.len(), x.len());
    for (o, &v) in out.iter_mut().zip(x.iter()) {
        *o += s * v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.3 - 1.0).collect();
        let b: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn matvec_identity() {
        let eye = Matrix::from_fn(3, 3, |r, c| if r == c { 1.0 } else { 0.0 });
        let x = [2.0, -1.0, 0.5];
        let mut out = [0.0; 3];
        eye.matvec(&x, &mut out);
        assert_eq!(out, x);
    }

    #[test]
    fn matvec_t_is_transpose() {
        let a = Matrix::from_fn(2, 3, |r, c| (r * 3 + c) as f64);
        let y = [1.0, 2.0];
        let mut out = [0.0; 3];
        a.matvec_t_add(&y, &mut out);
        // Aᵀy with A = [[0,1,2],[3,4,5]]
        assert_eq!(out, [6.0, 9.0, 12.0]);
    }

    #[test]
    fn outer_accumulates() {
        let mut a = Matrix::zeros(2, 2);
        a.add_outer(&[1.0, 2.0], &[3.0, 4.0]);
        a.add_outer(&[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!(a.row(0), &[3.0, 5.0]);
        assert_eq!(a.row(1), &[6.0, 8.0]);
    }
}
