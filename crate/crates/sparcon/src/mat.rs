//! Dense row-major f64 matrix, just large enough for the model and its tests.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }

    pub fn same_shape(&self, other: &Mat) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// self · rhs. Skips zero entries of the left operand, which makes
    /// products against sparse bag-of-words attribute rows cheap.
    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let a_row = self.row(r);
            let out_row = out.row_mut(r);
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = rhs.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// self += aᵀ · b, where a is k×rows and b is k×cols. Zero entries of
    /// `a` are skipped.
    pub fn add_transpose_mul(&mut self, a: &Mat, b: &Mat) {
        assert_eq!(a.rows, b.rows, "add_transpose_mul shape mismatch");
        assert_eq!(a.cols, self.rows);
        assert_eq!(b.cols, self.cols);
        for k in 0..a.rows {
            let a_row = a.row(k);
            let b_row = b.row(k);
            for (r, &av) in a_row.iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                let out_row = self.row_mut(r);
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += av * bv;
                }
            }
        }
    }

    /// self += scale · uᵀ ⊗ v.
    pub fn add_scaled_outer(&mut self, scale: f64, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows);
        assert_eq!(v.len(), self.cols);
        for (r, &uv) in u.iter().enumerate() {
            if uv == 0.0 {
                continue;
            }
            let row = self.row_mut(r);
            for (o, &vv) in row.iter_mut().zip(v) {
                *o += scale * uv * vv;
            }
        }
    }
}

/// x · m for a row vector x, skipping zero entries of x.
pub fn vec_mat(x: &[f64], m: &Mat) -> Vec<f64> {
    assert_eq!(x.len(), m.rows(), "vec_mat shape mismatch");
    let mut out = vec![0.0; m.cols()];
    for (k, &a) in x.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (o, &b) in out.iter_mut().zip(m.row(k)) {
            *o += a * b;
        }
    }
    out
}

/// m · xᵀ for a column vector x.
pub fn mat_vec(m: &Mat, x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), m.cols(), "mat_vec shape mismatch");
    (0..m.rows())
        .map(|r| m.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
