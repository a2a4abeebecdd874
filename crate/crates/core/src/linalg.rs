//! Dense row-major matrices and the handful of kernels the solvers need.
//!
//! Every kernel accepts an optional row subset so that cross-fitting can work
//! on index views of one shared design instead of copying sub-matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Wraps a row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("Matrix::from_vec", rows * cols, data.len())?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len("Matrix::from_rows", cols, r.as_ref().len())?;
            data.extend_from_slice(r.as_ref());
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
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
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
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

    /// Copies the row range `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Matrix {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// `[self other]`, side by side.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        check_len("Matrix::hstack", self.rows, other.rows)?;
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// `self` on top of `other`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows > 0 && other.rows > 0 {
            check_len("Matrix::vstack", self.cols, other.cols)?;
        }
        let cols = if self.rows > 0 { self.cols } else { other.cols };
        let mut data = Vec::with_capacity((self.rows + other.rows) * cols);
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols,
            data,
        })
    }

    /// Dense product `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("Matrix::mul_vec", self.cols, v.len())?;
        let mut out = vec![0.0; self.rows];
        mul_vec_rows(self, None, v, &mut out);
        Ok(out)
    }

    /// Dense product `selfᵀ * v`.
    pub fn tmul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("Matrix::tmul_vec", self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        tmul_vec_rows(self, None, v, &mut out);
        Ok(out)
    }
}

/// Dot product with four independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Number of rows addressed by an optional subset.
#[inline]
pub fn subset_len(m: &Matrix, rows: Option<&[usize]>) -> usize {
    rows.map_or(m.rows(), |r| r.len())
}

/// `out[k] = row(rows[k]) · v`
pub fn mul_vec_rows(m: &Matrix, rows: Option<&[usize]>, v: &[f64], out: &mut [f64]) {
    match rows {
        None => {
            for (i, o) in out.iter_mut().enumerate() {
                *o = dot(m.row(i), v);
            }
        }
        Some(idx) => {
            for (o, &i) in out.iter_mut().zip(idx) {
                *o = dot(m.row(i), v);
            }
        }
    }
}

/// `out = Σ_k r[k] · row(rows[k])`
pub fn tmul_vec_rows(m: &Matrix, rows: Option<&[usize]>, r: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    match rows {
        None => {
            for (i, &ri) in r.iter().enumerate() {
                if ri != 0.0 {
                    axpy(ri, m.row(i), out);
                }
            }
        }
        Some(idx) => {
            for (&i, &ri) in idx.iter().zip(r) {
                if ri != 0.0 {
                    axpy(ri, m.row(i), out);
                }
            }
        }
    }
}

/// `scale · Σ_k w[k] x_k x_kᵀ` over the addressed rows. Weights must be
/// nonnegative.
pub fn weighted_gram(
    m: &Matrix,
    rows: Option<&[usize]>,
    weights: &[f64],
    scale: f64,
) -> Result<Matrix> {
    let count = subset_len(m, rows);
    check_len("weighted_gram", count, weights.len())?;
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Domain("weighted_gram needs nonnegative weights".into()));
    }
    let p = m.cols();
    let mut out = Matrix::zeros(p, p);
    const BLOCK: usize = 256;
    let mut buf = vec![0.0; BLOCK * p];
    let mut start = 0;
    while start < count {
        let len = BLOCK.min(count - start);
        for k in 0..len {
            let i = rows.map_or(start + k, |r| r[start + k]);
            let w = libm::sqrt(weights[start + k]);
            for (b, x) in buf[k * p..(k + 1) * p].iter_mut().zip(m.row(i)) {
                *b = w * x;
            }
        }
        // out += scale * Bᵀ B, with B the len × p block in `buf`.
        unsafe {
            matrixmultiply::dgemm(
                p,
                len,
                p,
                scale,
                buf.as_ptr(),
                1,
                p as isize,
                buf.as_ptr(),
                p as isize,
                1,
                1.0,
                out.data.as_mut_ptr(),
                p as isize,
                1,
            );
        }
        start += len;
    }
    // Symmetrize away rounding asymmetry from the blocked kernel.
    for i in 0..p {
        for j in (i + 1)..p {
            let avg = 0.5 * (out.get(i, j) + out.get(j, i));
            out.set(i, j, avg);
            out.set(j, i, avg);
        }
    }
    Ok(out)
}

/// Power-iteration estimate of the largest eigenvalue of `(1/m) XᵀX` over the
/// addressed rows.
pub fn gram_spectral_norm(m: &Matrix, rows: Option<&[usize]>, steps: usize) -> f64 {
    let count = subset_len(m, rows);
    let p = m.cols();
    if count == 0 || p == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / libm::sqrt(p as f64); p];
    let mut xv = vec![0.0; count];
    let mut w = vec![0.0; p];
    let mut estimate = 0.0;
    for _ in 0..steps.max(1) {
        mul_vec_rows(m, rows, &v, &mut xv);
        tmul_vec_rows(m, rows, &xv, &mut w);
        let nrm = norm2(&w);
        if nrm == 0.0 {
            return 0.0;
        }
        estimate = nrm / count as f64;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nrm;
        }
    }
    estimate
}
