//! Constraint-adapted frames and their structure functions.
//!
//! Convention used throughout the crate: `c[i][j][k]` is the coefficient in
//! `[f_k, f_j] = c^i_{jk} f_i`. Indices are 0-based in code and 1-based in
//! printed output.

use crate::error::{check_len, Error, Result};
use crate::numcore::{mat_inverse, solve_linear, Matrix, MatrixField};

/// Three-index array `c^i_{jk}` at a single base point, antisymmetric in `(j, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureTensor {
    rank: usize,
    values: Vec<f64>,
}

impl StructureTensor {
    pub fn zeros(rank: usize) -> Self {
        StructureTensor {
            rank,
            values: vec![0.0; rank * rank * rank],
        }
    }

    /// Builds from dense values `values[(i * rank + j) * rank + k]`, rejecting
    /// anything that is not exactly antisymmetric in the lower pair.
    pub fn from_values(rank: usize, values: Vec<f64>) -> Result<Self> {
        check_len("structure tensor entries", rank * rank * rank, values.len())?;
        let t = StructureTensor { rank, values };
        for i in 0..rank {
            for j in 0..rank {
                for k in j..rank {
                    if t.get(i, j, k) != -t.get(i, k, j) {
                        return Err(Error::Validation(format!(
                            "structure constants not antisymmetric at c[{}][{}][{}]",
                            i + 1,
                            j + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
        Ok(t)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.rank + j) * self.rank + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    /// Sets `c^i_{jk} = v` and `c^i_{kj} = -v`.
    pub fn set_pair(&mut self, i: usize, j: usize, k: usize, v: f64) {
        if j == k {
            return;
        }
        let (a, b) = (self.index(i, j, k), self.index(i, k, j));
        self.values[a] = v;
        self.values[b] = -v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &StructureTensor) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Entries `(i, j, k, value)` with `j < k` and `|value| > tol`.
    pub fn nonzeros(&self, tol: f64) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.rank {
            for j in 0..self.rank {
                for k in j + 1..self.rank {
                    let v = self.get(i, j, k);
                    if v.abs() > tol {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }
}

/// The structure of the frame `f'_B = T^E_B f_E`, where the old frame has
/// structure `old` (or is a coordinate frame when `None`).
///
/// `t_partials[l]` holds `∂_l T`, `rho_new` is the anchor of the new frame.
pub(crate) fn transformed_structure(
    old: Option<&StructureTensor>,
    rho_new: &Matrix,
    t: &Matrix,
    t_partials: &[Matrix],
    t_inv: &Matrix,
) -> StructureTensor {
    let n = t.rows();
    let m = rho_new.rows();
    let mut c = StructureTensor::zeros(n);
    let mut bracket = vec![0.0; n];
    for b in 0..n {
        for d in b + 1..n {
            // [f'_d, f'_b] in the old frame
            for (ia, slot) in bracket.iter_mut().enumerate() {
                let mut acc = 0.0;
                if let Some(old) = old {
                    for e in 0..n {
                        for f in 0..n {
                            acc += t[(f, d)] * t[(e, b)] * old.get(ia, e, f);
                        }
                    }
                }
                let mut along_d = 0.0;
                let mut along_b = 0.0;
                for l in 0..m {
                    along_d += rho_new[(l, d)] * t_partials[l][(ia, b)];
                    along_b += rho_new[(l, b)] * t_partials[l][(ia, d)];
                }
                *slot = acc + along_d - along_b;
            }
            for ic in 0..n {
                let mut v = 0.0;
                for (ia, x) in bracket.iter().enumerate() {
                    v += t_inv[(ic, ia)] * x;
                }
                c.set_pair(ic, b, d, v);
            }
        }
    }
    c
}

/// A frame on an `n`-dimensional chart whose first `k` columns span the
/// constraint distribution.
#[derive(Clone, Debug)]
pub struct FrameField {
    n: usize,
    k: usize,
    rho: MatrixField,
}

impl FrameField {
    pub fn new(n: usize, k: usize, rho: MatrixField) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Validation(format!(
                "constraint rank {k} outside 1..={n}"
            )));
        }
        if rho.dim() != n || rho.rows() != n || rho.cols() != n {
            return Err(Error::Dimension {
                context: "frame matrix size",
                expected: n,
                got: rho.rows().max(rho.cols()),
            });
        }
        Ok(FrameField { n, k, rho })
    }

    /// The coordinate frame on `n` dimensions, all directions admissible.
    pub fn identity(n: usize) -> Self {
        FrameField {
            n,
            k: n,
            rho: MatrixField::constant(n, Matrix::identity(n)),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rho(&self) -> &MatrixField {
        &self.rho
    }

    pub fn frame_matrix(&self, q: &[f64]) -> Result<Matrix> {
        self.rho.eval(q)
    }

    pub fn frame_inverse(&self, q: &[f64]) -> Result<Matrix> {
        mat_inverse(&self.frame_matrix(q)?)
    }

    /// `c^i_{jk}(q)` from the frame entries and their partials.
    pub fn structure_functions_tangent(&self, q: &[f64]) -> Result<StructureTensor> {
        check_len("frame point", self.n, q.len())?;
        let (rho, partials) = self.rho.eval_with_partials(q)?;
        let inv = mat_inverse(&rho)?;
        Ok(transformed_structure(None, &rho, &rho, &partials, &inv))
    }

    /// Frame components `z` with `rho(q) z = v`.
    pub fn decompose(&self, q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_len("velocity", self.n, v.len())?;
        solve_linear(&self.frame_matrix(q)?, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{Real, VectorRule};

    struct Skate;
    impl VectorRule for Skate {
        fn apply<S: Real>(&self, q: &[S]) -> Result<Vec<S>> {
            let (c, s) = (q[2].cos(), q[2].sin());
            let (z, o) = (S::constant(0.0), S::constant(1.0));
            Ok(vec![
                c.clone(),
                z.clone(),
                -s.clone(),
                s,
                z.clone(),
                c,
                z.clone(),
                o,
                z,
            ])
        }
    }

    fn skater() -> FrameField {
        FrameField::new(3, 2, MatrixField::new(3, 3, 3, Skate)).unwrap()
    }

    #[test]
    fn skater_frame_at_zero_and_right_angle() {
        let f = skater();
        let m = f.frame_matrix(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.entries(), &[1.0, 0.0, -0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let m = f
            .frame_matrix(&[0.0, 0.0, std::f64::consts::FRAC_PI_2])
            .unwrap();
        let col = |j| {
            m.column(j)
                .iter()
                .map(|x: &f64| x.round())
                .collect::<Vec<_>>()
        };
        assert_eq!(col(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(col(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(col(2), vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn skater_inverse_is_transpose() {
        let f = skater();
        let q = [0.0; 3];
        assert_eq!(
            f.frame_inverse(&q).unwrap(),
            f.frame_matrix(&q).unwrap().transpose()
        );
    }

    #[test]
    fn skater_structure() {
        let c = skater()
            .structure_functions_tangent(&[0.3, -1.0, 0.7])
            .unwrap();
        assert!((c.get(2, 0, 1) - 1.0).abs() < 1e-15);
        assert!((c.get(0, 1, 2) - 1.0).abs() < 1e-15);
        assert_eq!(c.nonzeros(1e-15).len(), 2);
    }

    #[test]
    fn constant_and_scaled_frames() {
        let two = FrameField::new(
            2,
            1,
            MatrixField::constant(2, Matrix::from_diagonal(&[2.0, 2.0])),
        )
        .unwrap();
        assert_eq!(
            two.frame_inverse(&[1.0, 1.0]).unwrap(),
            Matrix::from_diagonal(&[0.5, 0.5])
        );
        assert_eq!(
            two.structure_functions_tangent(&[1.0, 1.0]).unwrap(),
            StructureTensor::zeros(2)
        );
        let id = FrameField::identity(3);
        assert_eq!(
            id.frame_matrix(&[5.0, 6.0, 7.0]).unwrap(),
            Matrix::identity(3)
        );
    }

    #[test]
    fn decompose_skater_velocities() {
        let f = skater();
        assert_eq!(
            f.decompose(&[0.0; 3], &[1.0, 0.0, 0.0]).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        let z = f
            .decompose(&[0.0, 0.0, std::f64::consts::FRAC_PI_2], &[0.0, 1.0, 0.0])
            .unwrap();
        assert!((z[0] - 1.0).abs() < 1e-15 && z[1].abs() < 1e-15 && z[2].abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_rank_and_antisymmetry() {
        assert!(FrameField::new(2, 0, MatrixField::constant(2, Matrix::identity(2))).is_err());
        assert!(FrameField::new(2, 3, MatrixField::constant(2, Matrix::identity(2))).is_err());
        let mut v = vec![0.0; 8];
        v[1] = 1.0;
        assert!(matches!(
            StructureTensor::from_values(2, v),
            Err(Error::Validation(_))
        ));
    }
}
