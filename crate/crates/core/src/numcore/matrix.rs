//! Small dense matrices and Gaussian elimination with partial pivoting.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{check_len, Error, Result};

/// Relative pivot threshold below which a matrix is declared singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-13;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        check_len("matrix entries", rows * cols, entries.len())?;
        Ok(Matrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        check_len("matrix product", self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0.0;
                for l in 0..self.cols {
                    acc += self[(i, l)] * other[(l, j)];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("matrix-vector product", self.cols, v.len())?;
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Block of rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        let mut b = Matrix::zeros(r1 - r0, c1 - c0);
        for i in r0..r1 {
            for j in c0..c1 {
                b[(i - r0, j - c0)] = self[(i, j)];
            }
        }
        b
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{:?}", self[(i, j)]))
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Eliminates `a` in place, applying the same row operations to `rhs` (column-wise RHS block).
fn eliminate(a: &mut Matrix, rhs: &mut Matrix) -> Result<()> {
    let n = a.rows;
    let threshold = SINGULARITY_THRESHOLD * a.max_abs();
    for col in 0..n {
        let (pivot_row, pivot) =
            (col..n)
                .map(|r| (r, a[(r, col)].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if !(pivot > threshold) {
            return Err(Error::Singular { pivot, threshold });
        }
        if pivot_row != col {
            for j in 0..n {
                a.entries.swap(col * n + j, pivot_row * n + j);
            }
            for j in 0..rhs.cols {
                let rc = rhs.cols;
                rhs.entries.swap(col * rc + j, pivot_row * rc + j);
            }
        }
        for r in (col + 1)..n {
            let factor = a[(r, col)] / a[(col, col)];
            if factor == 0.0 {
                continue;
            }
            a[(r, col)] = 0.0;
            for j in (col + 1)..n {
                a[(r, j)] -= factor * a[(col, j)];
            }
            for j in 0..rhs.cols {
                rhs[(r, j)] -= factor * rhs[(col, j)];
            }
        }
    }
    // back substitution
    for j in 0..rhs.cols {
        for i in (0..n).rev() {
            let mut acc = rhs[(i, j)];
            for l in (i + 1)..n {
                acc -= a[(i, l)] * rhs[(l, j)];
            }
            rhs[(i, j)] = acc / a[(i, i)];
        }
    }
    Ok(())
}

/// Inverse of a square matrix.
pub fn mat_inverse(a: &Matrix) -> Result<Matrix> {
    check_len("mat_inverse (square)", a.rows, a.cols)?;
    let mut work = a.clone();
    let mut inv = Matrix::identity(a.rows);
    eliminate(&mut work, &mut inv)?;
    Ok(inv)
}

/// Solves `a x = b`.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_len("solve_linear (square)", a.rows, a.cols)?;
    check_len("solve_linear rhs", a.rows, b.len())?;
    let mut work = a.clone();
    let mut rhs = Matrix::from_row_major(b.len(), 1, b.to_vec())?;
    eliminate(&mut work, &mut rhs)?;
    Ok(rhs.entries)
}
