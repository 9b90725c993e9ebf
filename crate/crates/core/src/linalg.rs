//! Small dense square matrices: the H matrix, covariance matrices and the
//! Cauchy scale matrix never exceed a handful of rows.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{param, Error, Result};

/// Pivots with absolute value below this are treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Largest dimension accepted by [`invert_matrix`].
pub const MAX_INVERT_DIM: usize = 16;

/// Row-major square matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(param(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.dim != other.dim {
            return Err(param("matrix dimensions differ"));
        }
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self[(i, l)];
                for j in 0..n {
                    out[(i, j)] += a * other[(l, j)];
                }
            }
        }
        Ok(out)
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix> {
        if self.dim != other.dim {
            return Err(param("matrix dimensions differ"));
        }
        Ok(Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// `vᵀ M v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += v[i] * self[(i, j)] * v[j];
            }
        }
        acc
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Lower-triangular Cholesky factor, or `None` when the matrix is not
    /// symmetric positive definite.
    pub fn cholesky(&self) -> Option<Matrix> {
        if !self.is_symmetric() {
            return None;
        }
        let n = self.dim;
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let mut diag = self[(j, j)];
            for p in 0..j {
                diag -= l[(j, p)] * l[(j, p)];
            }
            if !(diag > 0.0) {
                return None;
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut v = self[(i, j)];
                for p in 0..j {
                    v -= l[(i, p)] * l[(j, p)];
                }
                l[(i, j)] = v / ljj;
            }
        }
        Some(l)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.dim).map(|i| self.row(i)))
            .finish()
    }
}

/// Inverts `m` by Gauss-Jordan elimination with partial pivoting.
///
/// Fails with [`Error::SingularMatrix`] when the best available pivot in
/// some column falls below [`PIVOT_TOLERANCE`].
pub fn invert_matrix(m: &Matrix) -> Result<Matrix> {
    let n = m.dim();
    if n == 0 || n > MAX_INVERT_DIM {
        return Err(param(format!(
            "matrix dimension {n} outside 1..={MAX_INVERT_DIM}"
        )));
    }
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(param("matrix has non-finite entries"));
    }
    let mut a = m.clone();
    let mut inv = Matrix::identity(n);

    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, a[(r, col)]))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .expect("non-empty pivot range");
        if pivot.abs() < PIVOT_TOLERANCE {
            return Err(Error::SingularMatrix {
                column: col,
                pivot,
                tolerance: PIVOT_TOLERANCE,
            });
        }
        if pivot_row != col {
            for j in 0..n {
                a.data.swap(col * n + j, pivot_row * n + j);
                inv.data.swap(col * n + j, pivot_row * n + j);
            }
        }
        let scale = 1.0 / pivot;
        for j in 0..n {
            a[(col, j)] *= scale;
            inv[(col, j)] *= scale;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                a[(r, j)] -= factor * a[(col, j)];
                inv[(r, j)] -= factor * inv[(col, j)];
            }
        }
    }
    Ok(inv)
}
