//! Numerical substrate: dual numbers, dense linear algebra, differentiable
//! fields and Newton's method.

pub mod dual;
pub mod field;
pub mod matrix;
pub mod newton;

pub use dual::{seed, Dual, Dual2, Real};
pub use field::{
    grad, hessian_block, value_and_grad, DynRule, DynVectorRule, FieldRule, MatrixField,
    ScalarField, VectorRule,
};
pub use matrix::{mat_inverse, solve_linear, Matrix, SINGULARITY_THRESHOLD};
pub use newton::{newton_solve, NewtonReport, DEFAULT_MAX_ITER, DEFAULT_TOL};
