//! Dense row-major matrix and the handful of linear-algebra kernels the
//! training and inference paths need.

use super::scalar::Scalar;
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Dense 2-D array of scalars in row-major order. The single numeric carrier
/// for inputs, weights, activations and gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

#[derive(Clone, Copy)]
enum MulKind {
    /// A * B
    NN,
    /// A * B^T
    NT,
    /// A^T * B
    TN,
}

/// Below this many scalar multiply-adds a product is done in one gemm call;
/// above it the output rows are split across the rayon pool. Each output
/// element is always produced by exactly one gemm call with a fixed
/// k-traversal, so results are independent of the parallelism degree.
const PAR_WORK_THRESHOLD: usize = 1 << 16;

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Single-row matrix borrowing nothing: copies the slice.
    pub fn from_row(row: &[S]) -> Self {
        Matrix {
            rows: 1,
            cols: row.len(),
            data: row.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }
    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
    #[inline]
    pub fn data(&self) -> &[S] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    fn mul_checked(&self, rhs: &Self, kind: MulKind, op: &'static str) -> Result<Self> {
        let (m, k, n, k2) = match kind {
            MulKind::NN => (self.rows, self.cols, rhs.cols, rhs.rows),
            MulKind::NT => (self.rows, self.cols, rhs.rows, rhs.cols),
            MulKind::TN => (self.cols, self.rows, rhs.cols, rhs.rows),
        };
        if k != k2 {
            return Err(Error::DimMismatch {
                op,
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: rhs.rows,
                rhs_cols: rhs.cols,
            });
        }
        // Strides of the logical (possibly transposed) operands over the
        // physical row-major buffers.
        let (rsa, csa) = match kind {
            MulKind::NN | MulKind::NT => (self.cols as isize, 1),
            MulKind::TN => (1, self.cols as isize),
        };
        let (rsb, csb) = match kind {
            MulKind::NN | MulKind::TN => (rhs.cols as isize, 1),
            MulKind::NT => (1, rhs.cols as isize),
        };

        let mut out = Matrix::zeros(m, n);
        if m == 0 || n == 0 || k == 0 {
            return Ok(out);
        }

        let a = &self.data;
        let b = &rhs.data;
        let work = m * k * n;
        if work < PAR_WORK_THRESHOLD || m < 2 {
            unsafe {
                S::gemm(
                    m,
                    k,
                    n,
                    S::one(),
                    a.as_ptr(),
                    rsa,
                    csa,
                    b.as_ptr(),
                    rsb,
                    csb,
                    S::zero(),
                    out.data.as_mut_ptr(),
                    n as isize,
                    1,
                );
            }
            return Ok(out);
        }

        let threads = rayon::current_num_threads().max(1);
        let chunk_rows = m.div_ceil(threads * 4).max(8).min(m);
        out.data
            .par_chunks_mut(chunk_rows * n)
            .enumerate()
            .for_each(|(i, c_chunk)| {
                let r0 = i * chunk_rows;
                let mrows = c_chunk.len() / n;
                unsafe {
                    S::gemm(
                        mrows,
                        k,
                        n,
                        S::one(),
                        a.as_ptr().offset(r0 as isize * rsa),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        S::zero(),
                        c_chunk.as_mut_ptr(),
                        n as isize,
                        1,
                    );
                }
            });
        Ok(out)
    }

    /// Standard matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.mul_checked(rhs, MulKind::NN, "matmul")
    }

    /// `self * rhs^T` without materializing the transpose.
    pub fn matmul_nt(&self, rhs: &Self) -> Result<Self> {
        self.mul_checked(rhs, MulKind::NT, "matmul_nt")
    }

    /// `self^T * rhs` without materializing the transpose.
    pub fn matmul_tn(&self, rhs: &Self) -> Result<Self> {
        self.mul_checked(rhs, MulKind::TN, "matmul_tn")
    }

    pub fn transpose(&self) -> Self {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `max(0, x)`.
    pub fn relu(&self) -> Self {
        self.map(|v| v.max(S::zero()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_check(other, "add")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add_in_place(&mut self, other: &Self) -> Result<()> {
        self.zip_check(other, "add_in_place")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, s: S) -> Self {
        self.map(|v| v * s)
    }

    /// Adds a `1 x cols` row to every row of `self` (bias broadcast).
    pub fn add_row_broadcast(&self, row: &Self) -> Result<Self> {
        if row.rows != 1 || row.cols != self.cols {
            return Err(Error::DimMismatch {
                op: "add_row_broadcast",
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: row.rows,
                rhs_cols: row.cols,
            });
        }
        let mut out = self.clone();
        for r in 0..out.rows {
            for (v, &b) in out.row_mut(r).iter_mut().zip(&row.data) {
                *v += b;
            }
        }
        Ok(out)
    }

    /// Multiplies row `i` by `factors[i]`.
    pub fn scale_rows(&self, factors: &[S]) -> Self {
        debug_assert_eq!(factors.len(), self.rows);
        let mut out = self.clone();
        for (r, &f) in factors.iter().enumerate() {
            for v in out.row_mut(r) {
                *v *= f;
            }
        }
        out
    }

    /// Column sums as a `1 x cols` matrix; rows are accumulated in index
    /// order so the reduction is deterministic.
    pub fn col_sums(&self) -> Self {
        let mut out = Matrix::zeros(1, self.cols);
        for r in 0..self.rows {
            for (acc, &v) in out.data.iter_mut().zip(self.row(r)) {
                *acc += v;
            }
        }
        out
    }

    /// Per-row sum of squared entries.
    pub fn row_sq_sums(&self) -> Vec<S> {
        (0..self.rows)
            .map(|r| {
                let mut acc = S::zero();
                for &v in self.row(r) {
                    acc += v * v;
                }
                acc
            })
            .collect()
    }

    /// Divides each row by `max(euclidean_norm(row), eps)`.
    pub fn l2_normalize_rows(&self, eps: S) -> Self {
        assert!(eps > S::zero(), "l2_normalize_rows requires eps > 0");
        let mut out = self.clone();
        for r in 0..out.rows {
            let mut sq = S::zero();
            for &v in out.row(r) {
                sq += v * v;
            }
            let denom = sq.sqrt().max(eps);
            for v in out.row_mut(r) {
                *v /= denom;
            }
        }
        out
    }

    /// New matrix whose rows are `self`'s rows at `idx`, in order.
    pub fn gather_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimMismatch {
                op: "vstack",
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: other.rows,
                rhs_cols: other.cols,
            });
        }
        let mut data = Vec::with_capacity((self.rows + other.rows) * self.cols);
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a.to_f64_lossy() - b.to_f64_lossy()).abs())
            .fold(0.0, f64::max)
    }

    /// Exact bit-pattern equality, used by determinism harnesses.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(&a, &b)| a.to_bits_u64() == b.to_bits_u64())
    }

    fn zip_check(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimMismatch {
                op,
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: other.rows,
                rhs_cols: other.cols,
            });
        }
        Ok(())
    }
}
