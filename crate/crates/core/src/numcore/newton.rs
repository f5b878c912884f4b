use super::matrix::{solve_linear, Matrix};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 50;

/// Outcome of a successful Newton solve.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    pub root: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Undamped Newton iteration on `residual`, which returns `(F(x), J(x))`.
///
/// Returns the first iterate with `|F(x)|_inf <= tol`; the initial guess counts
/// as iterate zero.
pub fn newton_solve<F>(
    mut residual: F,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonReport>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, Matrix)>,
{
    if !(tol > 0.0) {
        return Err(Error::Validation(format!(
            "newton tolerance must be positive, got {tol}"
        )));
    }
    let mut x = x0.to_vec();
    let mut last = f64::INFINITY;
    for iteration in 0..=max_iter {
        let (f, jac) = residual(&x)?;
        last = norm_inf(&f);
        if !last.is_finite() {
            return Err(Error::NumericDomain("newton residual is not finite".into()));
        }
        if last <= tol {
            return Ok(NewtonReport {
                root: x,
                iterations: iteration,
                residual: last,
            });
        }
        if iteration == max_iter {
            break;
        }
        let step = solve_linear(&jac, &f)?;
        for (xi, si) in x.iter_mut().zip(step) {
            *xi -= si;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: last,
    })
}
