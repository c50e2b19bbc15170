//! Minimal row-compressed sparse matrix used for normalized adjacency,
//! adjacency features and stacked APPR rows.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles a matrix from raw CSR arrays. Column indices in each row
    /// must be strictly increasing.
    pub fn from_raw(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        assert_eq!(offsets.len(), rows + 1);
        assert_eq!(indices.len(), values.len());
        assert_eq!(*offsets.last().unwrap(), indices.len());
        debug_assert!((0..rows).all(|r| {
            let row = &indices[offsets[r]..offsets[r + 1]];
            row.windows(2).all(|w| w[0] < w[1]) && row.iter().all(|&c| c < cols)
        }));
        CsrMatrix {
            rows,
            cols,
            offsets,
            indices,
            values,
        }
    }

    /// Stacks sparse rows given as `(sorted indices, values)` pairs.
    pub fn from_rows<I>(cols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = (Vec<usize>, Vec<f64>)>,
    {
        let mut offsets = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (idx, val) in rows {
            indices.extend(idx);
            values.extend(val);
            offsets.push(indices.len());
        }
        let n = offsets.len() - 1;
        Self::from_raw(n, cols, offsets, indices, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.offsets[r]..self.offsets[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (idx, val) = self.row(r);
        idx.binary_search(&c).map(|k| val[k]).unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| {
                let mut out = vec![0.0; self.cols];
                let (idx, val) = self.row(r);
                for (&c, &v) in idx.iter().zip(val) {
                    out[c] = v;
                }
                out
            })
            .collect()
    }

    /// `self · rhs`.
    pub fn mul_dense(&self, rhs: ArrayView2<f64>) -> Result<Array2<f64>> {
        let all: Vec<usize> = (0..self.rows).collect();
        self.mul_dense_rows(&all, rhs)
    }

    /// Rows `rows` of `self · rhs`, in the order given.
    pub fn mul_dense_rows(&self, rows: &[usize], rhs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if rhs.nrows() != self.cols {
            return Err(Error::Dimension(format!(
                "sparse {}x{} times dense {}x{}",
                self.rows,
                self.cols,
                rhs.nrows(),
                rhs.ncols()
            )));
        }
        let mut out = Array2::zeros((rows.len(), rhs.ncols()));
        for (i, &r) in rows.iter().enumerate() {
            let (idx, val) = self.row(r);
            let mut dst = out.row_mut(i);
            for (&c, &v) in idx.iter().zip(val) {
                dst.scaled_add(v, &rhs.row(c));
            }
        }
        Ok(out)
    }

    /// `self[rows]^T · grad`, i.e. the gradient of a linear map applied to
    /// the selected rows. `grad` has one row per entry of `rows`.
    pub fn transpose_mul_dense_rows(&self, rows: &[usize], grad: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(rows.len(), grad.nrows());
        let mut out = Array2::zeros((self.cols, grad.ncols()));
        for (i, &r) in rows.iter().enumerate() {
            let (idx, val) = self.row(r);
            let g = grad.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                out.row_mut(c).scaled_add(v, &g);
            }
        }
        out
    }
}
