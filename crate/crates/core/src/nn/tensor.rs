//! Row-major 2-D tensors and the three matrix products backprop needs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum row count before a product parallelizes. Each output row is
/// produced by exactly one task with a fixed inner summation order, so the
/// result does not depend on the worker count.
const PAR_ROWS: usize = 64;

/// A dense row-major matrix of f64 values; `rows` is the batch dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::validation(format!(
                "tensor data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Tensor2 { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::validation("ragged rows in tensor".to_string()));
            }
            data.extend_from_slice(&row);
        }
        Ok(Tensor2 { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self · rhs`, i.e. `[r x k] · [k x c] -> [r x c]`.
    pub fn matmul(&self, rhs: &Tensor2) -> Tensor2 {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let (r, k, c) = (self.rows, self.cols, rhs.cols);
        let mut out = Tensor2::zeros(r, c);
        let body = |(i, out_row): (usize, &mut [f64])| {
            let a_row = &self.data[i * k..(i + 1) * k];
            for (kk, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &rhs.data[kk * c..(kk + 1) * c];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        };
        if r >= PAR_ROWS {
            out.data.par_chunks_mut(c).enumerate().for_each(body);
        } else {
            out.data.chunks_mut(c).enumerate().for_each(body);
        }
        out
    }

    /// `selfᵀ · rhs`, i.e. `[b x r]ᵀ · [b x c] -> [r x c]`. Used for weight
    /// gradients (`dW = Xᵀ · dZ`).
    pub fn transpose_matmul(&self, rhs: &Tensor2) -> Tensor2 {
        assert_eq!(self.rows, rhs.rows, "transpose_matmul shape mismatch");
        let (b, r, c) = (self.rows, self.cols, rhs.cols);
        let mut out = Tensor2::zeros(r, c);
        let body = |(i, out_row): (usize, &mut [f64])| {
            for bb in 0..b {
                let a = self.data[bb * r + i];
                if a == 0.0 {
                    continue;
                }
                let b_row = &rhs.data[bb * c..(bb + 1) * c];
                for (o, &v) in out_row.iter_mut().zip(b_row) {
                    *o += a * v;
                }
            }
        };
        if r >= PAR_ROWS {
            out.data.par_chunks_mut(c).enumerate().for_each(body);
        } else {
            out.data.chunks_mut(c).enumerate().for_each(body);
        }
        out
    }

    /// `self · rhsᵀ`, i.e. `[r x k] · [c x k]ᵀ -> [r x c]`. Used for input
    /// gradients (`dX = dZ · Wᵀ`).
    pub fn matmul_transpose(&self, rhs: &Tensor2) -> Tensor2 {
        assert_eq!(self.cols, rhs.cols, "matmul_transpose shape mismatch");
        let (r, k, c) = (self.rows, self.cols, rhs.rows);
        let mut out = Tensor2::zeros(r, c);
        let body = |(i, out_row): (usize, &mut [f64])| {
            let a_row = &self.data[i * k..(i + 1) * k];
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = &rhs.data[j * k..(j + 1) * k];
                *o = a_row.iter().zip(b_row).map(|(x, y)| x * y).sum();
            }
        };
        if r >= PAR_ROWS {
            out.data.par_chunks_mut(c).enumerate().for_each(body);
        } else {
            out.data.chunks_mut(c).enumerate().for_each(body);
        }
        out
    }

    /// Sum over the batch dimension: `[b x c] -> [c]`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.iter_rows() {
            for (o, &v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }
}
