//! The Dirac algebroid induced by a constraint: elements, pairing,
//! consistency and the reduced phase dynamics.
//!
//! Fiber indices `0..k` are admissible, `k..N` transverse.

use crate::algebroid::{PhaseState, SkewAlgebroid, StateKind};
use crate::error::{check_len, Error, Result};
use crate::numcore::{
    grad, hessian_block, mat_inverse, newton_solve, MatrixField, ScalarField, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};

#[derive(Clone, Debug)]
pub struct DiracAlgebroid {
    alg: SkewAlgebroid,
    k: usize,
}

/// How the transverse momenta are recovered from `∂H/∂η_α = 0`.
#[derive(Clone, Debug)]
pub enum ConsistencySolution {
    /// `η_α = 0`.
    Zero,
    /// `η_α = A_α(q)`, a column field with `N − k` rows.
    Affine(MatrixField),
    /// Solved numerically.
    Newton,
}

/// A point of the Dirac structure over a full phase state.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracElement {
    pub base: PhaseState,
    pub cov_base: Vec<f64>,
    pub cov_fiber: Vec<f64>,
    pub vec_base: Vec<f64>,
    pub vec_fiber: Vec<f64>,
}

/// The reduced field together with the transverse momenta it was evaluated at.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedField {
    pub qdot: Vec<f64>,
    pub etadot: Vec<f64>,
    pub eta_alpha: Vec<f64>,
}

/// Metric and magnetic data of a Hamiltonian
/// `(1/2m) g^{ab}(η_a − A_a)(η_b − A_b) + V`.
#[derive(Clone, Debug)]
pub struct MetricData {
    pub mass: f64,
    /// `g^{ab}(q)` on the admissible block, `k x k`.
    pub g_inv: MatrixField,
    /// `A_A(q)` for all `N` fiber indices, as an `N x 1` field.
    pub one_form: Option<MatrixField>,
    /// `V(q)` over base coordinates.
    pub potential: Option<ScalarField>,
}

impl DiracAlgebroid {
    pub fn new(alg: SkewAlgebroid, k: usize) -> Result<Self> {
        if k == 0 || k > alg.rank() {
            return Err(Error::Validation(format!(
                "constraint rank {k} outside 1..={}",
                alg.rank()
            )));
        }
        Ok(DiracAlgebroid { alg, k })
    }

    pub fn algebroid(&self) -> &SkewAlgebroid {
        &self.alg
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn base_dim(&self) -> usize {
        self.alg.base_dim()
    }

    pub fn rank(&self) -> usize {
        self.alg.rank()
    }

    pub fn transverse(&self) -> usize {
        self.alg.rank() - self.k
    }

    pub fn make_element(
        &self,
        s: &PhaseState,
        a: &[f64],
        xb: &[f64],
        etadot_alpha: &[f64],
    ) -> Result<DiracElement> {
        let (m, n, k) = (self.base_dim(), self.rank(), self.k);
        check_len("element base point", m, s.q.len())?;
        check_len("element momenta", n, s.eta.len())?;
        check_len("covector base part", m, a.len())?;
        check_len("admissible velocities", k, xb.len())?;
        check_len("transverse momentum rates", n - k, etadot_alpha.len())?;
        let rho = self.alg.anchor(&s.q)?;
        let c = self.alg.structure(&s.q)?;
        let vec_base = (0..m)
            .map(|i| (0..k).map(|b| rho[(i, b)] * xb[b]).sum())
            .collect();
        let mut vec_fiber: Vec<f64> = (0..k)
            .map(|b| {
                let mut v = 0.0;
                for ia in 0..n {
                    for d in 0..k {
                        v += c.get(ia, b, d) * s.eta[ia] * xb[d];
                    }
                }
                for (l, al) in a.iter().enumerate() {
                    v -= rho[(l, b)] * al;
                }
                v
            })
            .collect();
        vec_fiber.extend_from_slice(etadot_alpha);
        let mut cov_fiber = xb.to_vec();
        cov_fiber.resize(n, 0.0);
        Ok(DiracElement {
            base: PhaseState::full(s.q.clone(), s.eta.clone()),
            cov_base: a.to_vec(),
            cov_fiber,
            vec_base,
            vec_fiber,
        })
    }

    /// `∂H/∂η_α` at a full state.
    pub fn consistency_residual(&self, h: &ScalarField, s: &PhaseState) -> Result<Vec<f64>> {
        check_len(
            "hamiltonian arity",
            self.base_dim() + self.rank(),
            h.arity(),
        )?;
        let g = grad(h, &s.point())?;
        Ok(g[self.base_dim() + self.k..].to_vec())
    }

    /// Transverse momenta `η_α` solving `∂H/∂η_α = 0` at `(q, η_a)`.
    pub fn solve_consistency(
        &self,
        h: &ScalarField,
        consistency: &ConsistencySolution,
        q: &[f64],
        eta_a: &[f64],
        guess: &[f64],
    ) -> Result<Vec<f64>> {
        let (m, k, t) = (self.base_dim(), self.k, self.transverse());
        check_len("base point", m, q.len())?;
        check_len("admissible momenta", k, eta_a.len())?;
        match consistency {
            ConsistencySolution::Zero => Ok(vec![0.0; t]),
            ConsistencySolution::Affine(a) => a.apply(q),
            ConsistencySolution::Newton => {
                check_len("newton guess", t, guess.len())?;
                let mut point = q.to_vec();
                point.extend_from_slice(eta_a);
                point.extend_from_slice(guess);
                let idx: Vec<usize> = (m + k..m + k + t).collect();
                let scale = 1.0 + eta_a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
                let report = newton_solve(
                    |ea| {
                        point[m + k..].copy_from_slice(ea);
                        let g = grad(h, &point)?;
                        let jac = hessian_block(h, &point, &idx)?;
                        Ok((g[m + k..].to_vec(), jac))
                    },
                    guess,
                    DEFAULT_TOL * scale,
                    DEFAULT_MAX_ITER,
                )
                .map_err(degenerate)?;
                // a flat direction can converge at once; still reject it
                point[m + k..].copy_from_slice(&report.root);
                mat_inverse(&hessian_block(h, &point, &idx)?).map_err(degenerate)?;
                Ok(report.root)
            }
        }
    }

    /// Completes `(q, η_a)` with the transverse momenta.
    pub fn complete(
        &self,
        h: &ScalarField,
        consistency: &ConsistencySolution,
        rs: &PhaseState,
        guess: &[f64],
    ) -> Result<PhaseState> {
        let eta_alpha = self.solve_consistency(h, consistency, &rs.q, &rs.eta, guess)?;
        let mut eta = rs.eta.clone();
        eta.extend(eta_alpha);
        Ok(PhaseState::full(rs.q.clone(), eta))
    }

    /// The explicit dynamics on the effective phase space at `(q, η_a)`.
    pub fn reduced_vector_field(
        &self,
        h: &ScalarField,
        consistency: &ConsistencySolution,
        rs: &PhaseState,
        guess: &[f64],
    ) -> Result<ReducedField> {
        if rs.kind != StateKind::Reduced {
            return Err(Error::Validation(
                "reduced vector field needs a reduced state".into(),
            ));
        }
        let (m, n, k) = (self.base_dim(), self.rank(), self.k);
        let full = self.complete(h, consistency, rs, guess)?;
        let g = grad(h, &full.point())?;
        let (hq, he) = g.split_at(m);
        let rho = self.alg.anchor(&rs.q)?;
        let c = self.alg.structure(&rs.q)?;
        let qdot = (0..m)
            .map(|i| (0..k).map(|a| rho[(i, a)] * he[a]).sum())
            .collect();
        let etadot = (0..k)
            .map(|b| {
                let mut v = 0.0;
                for ia in 0..n {
                    for d in 0..k {
                        v += c.get(ia, b, d) * full.eta[ia] * he[d];
                    }
                }
                for (l, hl) in hq.iter().enumerate() {
                    v -= rho[(l, b)] * hl;
                }
                v
            })
            .collect();
        Ok(ReducedField {
            qdot,
            etadot,
            eta_alpha: full.eta[k..].to_vec(),
        })
    }
}

fn degenerate(e: Error) -> Error {
    match e {
        Error::Singular { .. } => Error::DegenerateHamiltonian,
        other => other,
    }
}

/// The symmetric pairing of two elements over the same base.
pub fn pairing(e1: &DiracElement, e2: &DiracElement) -> Result<f64> {
    Ok(pairing_terms(e1, e2)?.iter().sum())
}

/// Sum of absolute values of the individual pairing terms, a natural scale
/// for judging a pairing against zero.
pub fn pairing_scale(e1: &DiracElement, e2: &DiracElement) -> Result<f64> {
    Ok(pairing_terms(e1, e2)?.iter().map(|t| t.abs()).sum())
}

fn pairing_terms(e1: &DiracElement, e2: &DiracElement) -> Result<Vec<f64>> {
    if e1.base != e2.base {
        return Err(Error::Validation(
            "pairing of elements over different base points".into(),
        ));
    }
    let dims_ok = e1.cov_base.len() == e2.vec_base.len()
        && e2.cov_base.len() == e1.vec_base.len()
        && e1.cov_fiber.len() == e2.vec_fiber.len()
        && e2.cov_fiber.len() == e1.vec_fiber.len();
    if !dims_ok {
        return Err(Error::Validation(
            "pairing of elements with mismatched dimensions".into(),
        ));
    }
    let mut terms = Vec::new();
    let mut push = |cov: &[f64], vec: &[f64]| terms.extend(cov.iter().zip(vec).map(|(a, b)| a * b));
    push(&e1.cov_base, &e2.vec_base);
    push(&e1.cov_fiber, &e2.vec_fiber);
    push(&e2.cov_base, &e1.vec_base);
    push(&e2.cov_fiber, &e1.vec_fiber);
    Ok(terms)
}

/// Explicit mechanical dynamics on the restricted algebroid `alg` (rank `k`),
/// written directly from the metric and potential rather than through `H`.
pub fn oracle_mechanical(
    alg: &SkewAlgebroid,
    metric: &MetricData,
    rs: &PhaseState,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mech = MetricData {
        one_form: None,
        ..metric.clone()
    };
    explicit_dynamics(alg, alg.rank(), &mech, rs)
}

/// Explicit magnetic dynamics with the transverse momenta replaced by the
/// one-form components `A_α`.
pub fn oracle_magnetic(
    d: &DiracAlgebroid,
    metric: &MetricData,
    rs: &PhaseState,
) -> Result<(Vec<f64>, Vec<f64>)> {
    explicit_dynamics(&d.alg, d.k, metric, rs)
}

fn explicit_dynamics(
    alg: &SkewAlgebroid,
    k: usize,
    metric: &MetricData,
    rs: &PhaseState,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (alg.base_dim(), alg.rank());
    check_len("oracle base point", m, rs.q.len())?;
    check_len("oracle momenta", k, rs.eta.len())?;
    if metric.g_inv.rows() != k || metric.g_inv.cols() != k {
        return Err(Error::Dimension {
            context: "inverse metric block",
            expected: k,
            got: metric.g_inv.rows(),
        });
    }
    let q = &rs.q;
    let mass = metric.mass;
    let (gi, dgi) = metric.g_inv.eval_with_partials(q)?;
    let (a, da) = match &metric.one_form {
        Some(f) => {
            let (v, dv) = f.eval_with_partials(q)?;
            check_len("one-form components", n, v.rows())?;
            (
                v.column(0),
                dv.iter().map(|d| d.column(0)).collect::<Vec<_>>(),
            )
        }
        None => (vec![0.0; n], vec![vec![0.0; n]; m]),
    };
    let dv = match &metric.potential {
        Some(v) => grad(v, q)?,
        None => vec![0.0; m],
    };
    let p: Vec<f64> = (0..k).map(|i| rs.eta[i] - a[i]).collect();
    // H_{η_d} = (1/m) g^{de} p_e
    let he: Vec<f64> = (0..k)
        .map(|d| (0..k).map(|e| gi[(d, e)] * p[e]).sum::<f64>() / mass)
        .collect();
    // H_{q^l} = (1/2m) ∂_l g^{ab} p_a p_b − (1/m) g^{ab} p_a ∂_l A_b + ∂_l V
    let hq: Vec<f64> = (0..m)
        .map(|l| {
            let mut quad = 0.0;
            let mut cross = 0.0;
            for ia in 0..k {
                for b in 0..k {
                    quad += dgi[l][(ia, b)] * p[ia] * p[b];
                    cross += gi[(ia, b)] * p[ia] * da[l][b];
                }
            }
            quad / (2.0 * mass) - cross / mass + dv[l]
        })
        .collect();
    let rho = alg.anchor(q)?;
    let c = alg.structure(q)?;
    let qdot = (0..m)
        .map(|i| (0..k).map(|ia| rho[(i, ia)] * he[ia]).sum())
        .collect();
    let etadot = (0..k)
        .map(|b| {
            let mut v = 0.0;
            for d in 0..k {
                for ia in 0..k {
                    v += c.get(ia, b, d) * rs.eta[ia] * he[d];
                }
                for al in k..n {
                    v += c.get(al, b, d) * a[al] * he[d];
                }
            }
            for l in 0..m {
                v -= rho[(l, b)] * hq[l];
            }
            v
        })
        .collect();
    Ok((qdot, etadot))
}
