//! Row-major dense matrices for per-vertex point sets (`n × m`).

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// A dense row-major matrix. Rows are points (vertex images, embedding
/// coordinates), columns are coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RowMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RowMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows<const D: usize>(rows: &[[f64; D]]) -> Self {
        Self {
            rows: rows.len(),
            cols: D,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    /// Frobenius norm squared.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// `Σ_i weights[i] · ‖row_i‖²`.
    pub fn weighted_norm_sq(&self, weights: &[f64]) -> f64 {
        debug_assert_eq!(weights.len(), self.rows);
        self.row_iter()
            .zip(weights)
            .map(|(r, w)| w * r.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += s * b);
        Ok(())
    }

    /// Multiplies row `i` by `d[i]`.
    pub fn scale_rows(&mut self, d: &[f64]) {
        debug_assert_eq!(d.len(), self.rows);
        let cols = self.cols;
        for (row, &s) in self.data.chunks_mut(cols.max(1)).zip(d) {
            row.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for row in self.row_iter() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        if self.rows > 0 {
            means.iter_mut().for_each(|m| *m /= self.rows as f64);
        }
        means
    }

    /// Returns a copy with `extra` zero columns appended.
    pub fn pad_columns(&self, cols: usize) -> Self {
        assert!(cols >= self.cols);
        Self::from_fn(self.rows, cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                0.0
            }
        })
    }

    /// Horizontal concatenation `[a | b]`.
    pub fn hstack(a: &Self, b: &Self) -> Result<Self> {
        if a.rows != b.rows {
            return Err(Error::Dimension(format!(
                "hstack of {} and {} rows",
                a.rows, b.rows
            )));
        }
        let cols = a.cols + b.cols;
        let mut data = Vec::with_capacity(a.rows * cols);
        for i in 0..a.rows {
            data.extend_from_slice(a.row(i));
            data.extend_from_slice(b.row(i));
        }
        Ok(Self {
            rows: a.rows,
            cols,
            data,
        })
    }

    /// `self · q` for a `cols × k` column-major square/rectangular matrix given
    /// as a closure; used for orthogonal transforms in tests and gauge fixing.
    pub fn mul_right(&self, k: usize, q: impl Fn(usize, usize) -> f64) -> Self {
        Self::from_fn(self.rows, k, |i, j| {
            self.row(i)
                .iter()
                .enumerate()
                .map(|(l, v)| v * q(l, j))
                .sum()
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for RowMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RowMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_norm_and_means() {
        let m = RowMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(m.weighted_norm_sq(&[1.0, 0.5]), 5.0 + 12.5);
        assert_eq!(m.column_means(), vec![2.0, 3.0]);
        let p = m.pad_columns(4);
        assert_eq!(p.row(1), &[3.0, 4.0, 0.0, 0.0]);
    }

    #[test]
    fn shape_errors() {
        let a = RowMatrix::zeros(2, 3);
        let b = RowMatrix::zeros(3, 2);
        assert!(a.sub(&b).is_err());
        assert!(RowMatrix::from_vec(2, 2, vec![1.0]).is_err());
    }
}
