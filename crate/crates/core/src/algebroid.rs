//! Skew algebroids over a coordinate chart and the dynamics they generate.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::frame::{transformed_structure, FrameField, StructureTensor};
use crate::numcore::{grad, mat_inverse, Matrix, MatrixField, ScalarField};

type StructureFn = dyn Fn(&[f64]) -> Result<StructureTensor> + Send + Sync;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Full,
    Reduced,
}

/// Base coordinates `q^i` and momenta `η_A` (all `N`, or only the admissible `k`).
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub q: Vec<f64>,
    pub eta: Vec<f64>,
    pub kind: StateKind,
}

impl PhaseState {
    pub fn full(q: Vec<f64>, eta: Vec<f64>) -> Self {
        PhaseState {
            q,
            eta,
            kind: StateKind::Full,
        }
    }

    pub fn reduced(q: Vec<f64>, eta: Vec<f64>) -> Self {
        PhaseState {
            q,
            eta,
            kind: StateKind::Reduced,
        }
    }

    /// `q` followed by `eta`, the argument order of Hamiltonian fields.
    pub fn point(&self) -> Vec<f64> {
        let mut p = self.q.clone();
        p.extend_from_slice(&self.eta);
        p
    }
}

/// Base coordinates and fiber velocities `x^A`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityState {
    pub q: Vec<f64>,
    pub x: Vec<f64>,
}

impl VelocityState {
    pub fn new(q: Vec<f64>, x: Vec<f64>) -> Self {
        VelocityState { q, x }
    }

    pub fn point(&self) -> Vec<f64> {
        let mut p = self.q.clone();
        p.extend_from_slice(&self.x);
        p
    }
}

/// Anchor `ρ^i_A(q)` and structure functions `c^A_{BD}(q)` with
/// `[f_D, f_B] = c^A_{BD} f_A`. No Jacobi identity is assumed.
#[derive(Clone)]
pub struct SkewAlgebroid {
    base_dim: usize,
    rank: usize,
    anchor: MatrixField,
    structure: Arc<StructureFn>,
}

impl fmt::Debug for SkewAlgebroid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SkewAlgebroid")
            .field("base_dim", &self.base_dim)
            .field("rank", &self.rank)
            .finish_non_exhaustive()
    }
}

impl SkewAlgebroid {
    pub fn new(
        anchor: MatrixField,
        structure: impl Fn(&[f64]) -> Result<StructureTensor> + Send + Sync + 'static,
    ) -> Self {
        SkewAlgebroid {
            base_dim: anchor.rows(),
            rank: anchor.cols(),
            anchor,
            structure: Arc::new(structure),
        }
    }

    /// The tangent algebroid written in the frame `fr`.
    pub fn from_tangent_frame(fr: &FrameField) -> Self {
        let frame = fr.clone();
        SkewAlgebroid::new(fr.rho().clone(), move |q| {
            frame.structure_functions_tangent(q)
        })
    }

    /// `T R^m x g` for a Lie algebra `g` with constants `lie` (same index
    /// convention), using the coordinate frame on the first factor.
    pub fn product_with_lie_algebra(base_dim: usize, lie: &StructureTensor) -> Self {
        let m = base_dim;
        let n = m + lie.rank();
        let anchor = MatrixField::constant(m, Matrix::identity(m))
            .pad_columns(n)
            .expect("padding widens");
        let mut c = StructureTensor::zeros(n);
        for i in 0..lie.rank() {
            for j in 0..lie.rank() {
                for k in j + 1..lie.rank() {
                    c.set_pair(m + i, m + j, m + k, lie.get(i, j, k));
                }
            }
        }
        SkewAlgebroid::new(anchor, move |_| Ok(c.clone()))
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn anchor_field(&self) -> &MatrixField {
        &self.anchor
    }

    pub fn anchor(&self, q: &[f64]) -> Result<Matrix> {
        self.anchor.eval(q)
    }

    pub fn structure(&self, q: &[f64]) -> Result<StructureTensor> {
        check_len("algebroid base point", self.base_dim, q.len())?;
        let c = (self.structure)(q)?;
        check_len("structure rank", self.rank, c.rank())?;
        Ok(c)
    }

    /// The new frame `f'_B = T^E_B f_E`.
    pub fn change_frame(&self, t: &MatrixField) -> Result<SkewAlgebroid> {
        if t.rows() != self.rank || t.cols() != self.rank || t.dim() != self.base_dim {
            return Err(Error::Dimension {
                context: "frame change matrix",
                expected: self.rank,
                got: t.rows(),
            });
        }
        let anchor = self.anchor.mul(t)?;
        let old = self.clone();
        let (t, rho_new) = (t.clone(), anchor.clone());
        Ok(SkewAlgebroid::new(anchor, move |q| {
            let (tq, dt) = t.eval_with_partials(q)?;
            let inv = mat_inverse(&tq)?;
            let c = old.structure(q)?;
            let rho = rho_new.eval(q)?;
            Ok(transformed_structure(Some(&c), &rho, &tq, &dt, &inv))
        }))
    }

    /// The subalgebroid spanned by the first `k` sections, with the bracket
    /// projected along the remaining ones.
    pub fn restrict(&self, k: usize) -> Result<SkewAlgebroid> {
        if k == 0 || k > self.rank {
            return Err(Error::Validation(format!(
                "restriction rank {k} outside 1..={}",
                self.rank
            )));
        }
        let anchor = self.anchor.leading_columns(k)?;
        let full = self.clone();
        Ok(SkewAlgebroid::new(anchor, move |q| {
            let c = full.structure(q)?;
            let mut r = StructureTensor::zeros(k);
            for i in 0..k {
                for j in 0..k {
                    for l in j + 1..k {
                        r.set_pair(i, j, l, c.get(i, j, l));
                    }
                }
            }
            Ok(r)
        }))
    }

    fn check_state(&self, q: &[f64], fiber: &[f64]) -> Result<()> {
        check_len("base point", self.base_dim, q.len())?;
        check_len("fiber coordinates", self.rank, fiber.len())
    }

    /// `q̇^j = ρ^j_A H_{η_A}`, `η̇_B = c^D_{BE} η_D H_{η_E} − ρ^i_B H_{q^i}`.
    pub fn hamiltonian_vector_field(
        &self,
        h: &ScalarField,
        s: &PhaseState,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        if s.kind != StateKind::Full {
            return Err(Error::Validation(
                "hamiltonian vector field needs a full state".into(),
            ));
        }
        self.check_state(&s.q, &s.eta)?;
        let g = grad(h, &s.point())?;
        let (hq, he) = g.split_at(self.base_dim);
        let rho = self.anchor(&s.q)?;
        let c = self.structure(&s.q)?;
        let qdot = rho.mul_vec(he)?;
        let etadot = (0..self.rank)
            .map(|b| {
                let mut v = 0.0;
                for d in 0..self.rank {
                    for e in 0..self.rank {
                        v += c.get(d, b, e) * s.eta[d] * he[e];
                    }
                }
                for (i, hqi) in hq.iter().enumerate() {
                    v -= rho[(i, b)] * hqi;
                }
                v
            })
            .collect();
        Ok((qdot, etadot))
    }

    /// `(η, q̇, η̇)` from a Lagrangian `L(q, x)`.
    pub fn lagrangian_dynamics(
        &self,
        l: &ScalarField,
        vs: &VelocityState,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        self.check_state(&vs.q, &vs.x)?;
        let g = grad(l, &vs.point())?;
        let (lq, lx) = g.split_at(self.base_dim);
        let rho = self.anchor(&vs.q)?;
        let c = self.structure(&vs.q)?;
        let qdot = rho.mul_vec(&vs.x)?;
        let etadot = (0..self.rank)
            .map(|b| {
                let mut v = 0.0;
                for d in 0..self.rank {
                    for e in 0..self.rank {
                        v += c.get(d, b, e) * lx[d] * vs.x[e];
                    }
                }
                for (i, lqi) in lq.iter().enumerate() {
                    v += rho[(i, b)] * lqi;
                }
                v
            })
            .collect();
        Ok((lx.to_vec(), qdot, etadot))
    }

    /// Maximum residual of the Euler–Lagrange equations along uniformly
    /// spaced samples, using central differences with spacing `h`.
    pub fn euler_lagrange_residual(
        &self,
        l: &ScalarField,
        samples: &[VelocityState],
        h: f64,
    ) -> Result<f64> {
        if samples.len() < 3 {
            return Err(Error::Validation("need at least three samples".into()));
        }
        if !(h > 0.0) {
            return Err(Error::Validation(format!(
                "sample spacing must be positive, got {h}"
            )));
        }
        let momenta = samples
            .iter()
            .map(|s| legendre_map(l, s).map(|p| p.eta))
            .collect::<Result<Vec<_>>>()?;
        let mut worst: f64 = 0.0;
        for i in 1..samples.len() - 1 {
            let (_, qdot, etadot) = self.lagrangian_dynamics(l, &samples[i])?;
            for j in 0..self.base_dim {
                let fd = (samples[i + 1].q[j] - samples[i - 1].q[j]) / (2.0 * h);
                worst = worst.max((fd - qdot[j]).abs());
            }
            for b in 0..self.rank {
                let fd = (momenta[i + 1][b] - momenta[i - 1][b]) / (2.0 * h);
                worst = worst.max((fd - etadot[b]).abs());
            }
        }
        Ok(worst)
    }
}

/// `η_A = ∂L/∂x^A` at `vs`.
pub fn legendre_map(l: &ScalarField, vs: &VelocityState) -> Result<PhaseState> {
    let m = vs.q.len();
    check_len("lagrangian arity", l.arity(), m + vs.x.len())?;
    let g = grad(l, &vs.point())?;
    Ok(PhaseState::full(vs.q.clone(), g[m..].to_vec()))
}
