//! Fixed-step RK4 integration of the reduced dynamics.

use std::fmt;

use crate::algebroid::PhaseState;
use crate::error::{Error, Result};
use crate::systems::{fiber_velocities, velocity_components, SystemSpec};

/// Diagnostics recorded with every sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observables {
    pub h: f64,
    pub consistency_residual: f64,
    pub admissibility_residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub eta_alpha: Vec<Vec<f64>>,
    pub observables: Vec<Observables>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, s: PhaseState, eta_alpha: Vec<f64>, obs: Observables) {
        self.times.push(t);
        self.states.push(s);
        self.eta_alpha.push(eta_alpha);
        self.observables.push(obs);
    }
}

/// A trajectory cut short by a failed evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedTrajectory {
    pub partial: Trajectory,
    pub failed_at: f64,
    pub cause: Error,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimulationError {
    /// Invalid inputs; nothing was integrated.
    Config(Error),
    Truncated(Box<TruncatedTrajectory>),
}

impl fmt::Display for SimulationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimulationError::Config(e) => write!(f, "{e}"),
            SimulationError::Truncated(t) => write!(
                f,
                "trajectory truncated at t = {} after {} samples: {}",
                t.failed_at,
                t.partial.len(),
                t.cause
            ),
        }
    }
}

impl std::error::Error for SimulationError {}

impl From<Error> for SimulationError {
    fn from(e: Error) -> Self {
        SimulationError::Config(e)
    }
}

/// One classical Runge–Kutta step of `y' = f(y)`. Stage failures are
/// reported as [`Error::Stage`] with the 1-based stage index.
pub fn rk4_step<F>(f: F, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let inc = rk4_increment(f, y, dt)?;
    Ok(y.iter().zip(inc).map(|(a, d)| a + d).collect())
}

/// The RK4 update `y_{n+1} − y_n`.
pub fn rk4_increment<F>(mut f: F, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(dt > 0.0) {
        return Err(Error::Validation(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let mut stage = |i: usize, p: &[f64]| {
        f(p).map_err(|e| Error::Stage {
            stage: i,
            source: Box::new(e),
        })
    };
    let offset =
        |k: &[f64], c: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    let k1 = stage(1, y)?;
    let k2 = stage(2, &offset(&k1, 0.5 * dt))?;
    let k3 = stage(3, &offset(&k2, 0.5 * dt))?;
    let k4 = stage(4, &offset(&k3, dt))?;
    Ok((0..y.len())
        .map(|i| dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Observables at a reduced state; also returns the solved `η_α`.
pub fn observables(
    spec: &SystemSpec,
    rs: &PhaseState,
    guess: &[f64],
) -> Result<(Observables, Vec<f64>)> {
    let d = &spec.dirac;
    let field = d.reduced_vector_field(&spec.hamiltonian, &spec.consistency, rs, guess)?;
    let mut eta = rs.eta.clone();
    eta.extend_from_slice(&field.eta_alpha);
    let full = PhaseState::full(rs.q.clone(), eta);
    let h = spec.hamiltonian.eval(&full.point())?;
    let consistency_residual = max_abs(&d.consistency_residual(&spec.hamiltonian, &full)?);
    let admissibility_residual = match velocity_components(spec, &rs.q, &field.qdot)? {
        Some(z) => max_abs(&z[d.k()..]),
        // non-square anchor: transverse fiber velocities x^α = ∂H/∂η_α
        None => max_abs(&fiber_velocities(spec, &full)?[d.k()..]),
    };
    Ok((
        Observables {
            h,
            consistency_residual,
            admissibility_residual,
        },
        field.eta_alpha,
    ))
}

/// Number of uniform steps covering `[0, t_end]` with step at most `dt`
/// (up to rounding of `t_end / dt`).
pub fn step_count(t_end: f64, dt: f64) -> usize {
    let raw = t_end / dt;
    let near = raw.round();
    let n = if (raw - near).abs() <= 1e-9 * near.max(1.0) {
        near
    } else {
        raw.ceil()
    };
    (n as usize).max(1)
}

/// Integrates from `ic` to `t_end`, recording every `stride`-th step and
/// always the final one.
pub fn simulate(
    spec: &SystemSpec,
    ic: &PhaseState,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory, SimulationError> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Validation(format!("t_end must be positive, got {t_end}")).into());
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Validation(format!("dt must be positive, got {dt}")).into());
    }
    if stride == 0 {
        return Err(Error::Validation("stride must be at least 1".into()).into());
    }
    let (m, k) = (spec.base_dim(), spec.k());
    if ic.q.len() != m || ic.eta.len() != k {
        return Err(Error::Dimension {
            context: "initial reduced state",
            expected: m + k,
            got: ic.q.len() + ic.eta.len(),
        }
        .into());
    }
    let n = step_count(t_end, dt);
    let h = t_end / n as f64;
    let mut traj = Trajectory::default();
    let mut guess = vec![0.0; spec.dirac.transverse()];
    let truncate = |traj: Trajectory, t: f64, cause: Error| {
        SimulationError::Truncated(Box::new(TruncatedTrajectory {
            partial: traj,
            failed_at: t,
            cause,
        }))
    };

    let mut y = ic.q.clone();
    y.extend_from_slice(&ic.eta);
    let mut carry = vec![0.0; y.len()];
    let split = |v: &[f64]| PhaseState::reduced(v[..m].to_vec(), v[m..].to_vec());

    match observables(spec, ic, &guess) {
        Ok((obs, ea)) => {
            guess.clone_from(&ea);
            traj.push(0.0, split(&y), ea, obs);
        }
        Err(e) => return Err(truncate(traj, 0.0, e)),
    }

    for i in 1..=n {
        let warm = guess.clone();
        let field = |v: &[f64]| -> Result<Vec<f64>> {
            let r = spec.dirac.reduced_vector_field(
                &spec.hamiltonian,
                &spec.consistency,
                &split(v),
                &warm,
            )?;
            let mut out = r.qdot;
            out.extend(r.etadot);
            Ok(out)
        };
        let t = i as f64 * h;
        let inc = match rk4_increment(field, &y, h) {
            Ok(inc) => inc,
            Err(e) => return Err(truncate(traj, (i - 1) as f64 * h, e)),
        };
        // compensated accumulation keeps round-off below the truncation error
        for ((yi, ci), di) in y.iter_mut().zip(&mut carry).zip(inc) {
            let d = di - *ci;
            let next = *yi + d;
            *ci = (next - *yi) - d;
            *yi = next;
        }
        if y.iter().any(|v| !v.is_finite()) {
            let e = Error::NumericDomain("state left the finite range".into());
            return Err(truncate(traj, t, e));
        }
        let s = split(&y);
        if i % stride == 0 || i == n {
            let (obs, ea) = match observables(spec, &s, &guess) {
                Ok(v) => v,
                Err(e) => return Err(truncate(traj, t, e)),
            };
            guess.clone_from(&ea);
            traj.push(t, s, ea, obs);
        } else {
            match spec.dirac.solve_consistency(
                &spec.hamiltonian,
                &spec.consistency,
                &s.q,
                &s.eta,
                &guess,
            ) {
                Ok(ea) => guess = ea,
                Err(e) => return Err(truncate(traj, t, e)),
            }
        }
    }
    Ok(traj)
}
