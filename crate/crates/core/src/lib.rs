//! Numerical engine for nonholonomic mechanics on skew and Dirac algebroids.
//!
//! A constraint distribution is described by an adapted frame; the frame
//! induces a skew algebroid (anchor plus structure functions) and a Dirac
//! algebroid that turns any Hamiltonian into phase equations. The reduced
//! equations are integrated with RK4 and cross-checked against explicit
//! Hamiltonian forms and closed-form solutions.
//!
//! ```
//! use nonholo_core::{build, simulate, PhaseState};
//!
//! let spec = build("skater_free", &[]).unwrap();
//! let ic = PhaseState::reduced(vec![0.0, 0.0, 0.0], vec![1.0, 1.0]);
//! let traj = simulate(&spec, &ic, 1.0, 1e-2, 10).unwrap();
//! assert_eq!(traj.len(), 11);
//! ```

// index loops mirror the tensor formulas; `!(x > 0.0)` also rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl)]

pub mod algebroid;
pub mod dirac;
pub mod error;
pub mod exprparse;
pub mod frame;
pub mod integrate;
pub mod numcore;
pub mod systems;

pub use algebroid::{legendre_map, PhaseState, SkewAlgebroid, StateKind, VelocityState};
pub use dirac::{
    oracle_magnetic, oracle_mechanical, pairing, pairing_scale, ConsistencySolution,
    DiracAlgebroid, DiracElement, MetricData, ReducedField,
};
pub use error::{Error, Result};
pub use exprparse::{eval_expr, free_variables, parse_str, tokenize, ExprNode};
pub use frame::{FrameField, StructureTensor};
pub use integrate::{
    observables, rk4_step, simulate, Observables, SimulationError, Trajectory, TruncatedTrajectory,
};
pub use numcore::{
    grad, hessian_block, mat_inverse, solve_linear, Dual, Matrix, MatrixField, Real, ScalarField,
};
pub use systems::{analytic_state, build, hamiltonian_with_potential, SystemSpec, CATALOG};
