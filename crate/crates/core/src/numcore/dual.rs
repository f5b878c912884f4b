//! Forward-mode dual numbers carrying a full partials vector.
//!
//! A `Dual<T>` holds a value and one partial per active variable. An empty
//! partials vector denotes a constant; arithmetic treats missing entries as
//! exact zeros, so constants never need to know the active dimension.
//! Nesting one level (`Dual<Dual>`) yields second derivatives.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::field::{DynRule, DynVectorRule};
use crate::error::{Error, Result};

/// Scalar types the engine can evaluate fields over: `f64`, `Dual` and `Dual<Dual>`.
pub trait Real:
    Clone
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    /// The underlying real value (innermost value for nested duals).
    fn value(&self) -> f64;
    /// True when any (nested) partial is stored.
    fn has_partials(&self) -> bool;
    /// True when the value and every stored partial are finite.
    fn all_finite(&self) -> bool;

    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn powf(&self, e: f64) -> Self;

    fn scale(&self, c: f64) -> Self {
        Self::constant(c) * self.clone()
    }

    /// Evaluates a type-erased scalar rule at points of this scalar type.
    fn eval_rule(rule: &dyn DynRule, p: &[Self]) -> Result<Self>;
    /// Evaluates a type-erased scalar rule over `Dual<Self>`.
    fn eval_rule_lifted(rule: &dyn DynRule, p: &[Dual<Self>]) -> Result<Dual<Self>>;
    fn eval_vector_rule(rule: &dyn DynVectorRule, p: &[Self]) -> Result<Vec<Self>>;
    fn eval_vector_rule_lifted(
        rule: &dyn DynVectorRule,
        p: &[Dual<Self>],
    ) -> Result<Vec<Dual<Self>>>;
    fn eval_rule_lifted2(rule: &dyn DynRule, p: &[Dual<Dual<Self>>]) -> Result<Dual<Dual<Self>>>;
    fn eval_vector_rule_lifted2(
        rule: &dyn DynVectorRule,
        p: &[Dual<Dual<Self>>],
    ) -> Result<Vec<Dual<Dual<Self>>>>;
}

impl Real for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn has_partials(&self) -> bool {
        false
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn tan(&self) -> Self {
        f64::tan(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn powf(&self, e: f64) -> Self {
        f64::powf(*self, e)
    }
    fn scale(&self, c: f64) -> Self {
        c * self
    }
    fn eval_rule(rule: &dyn DynRule, p: &[Self]) -> Result<Self> {
        rule.eval_f64(p)
    }
    fn eval_rule_lifted(rule: &dyn DynRule, p: &[Dual<Self>]) -> Result<Dual<Self>> {
        rule.eval_dual(p)
    }
    fn eval_vector_rule(rule: &dyn DynVectorRule, p: &[Self]) -> Result<Vec<Self>> {
        rule.eval_f64(p)
    }
    fn eval_vector_rule_lifted(
        rule: &dyn DynVectorRule,
        p: &[Dual<Self>],
    ) -> Result<Vec<Dual<Self>>> {
        rule.eval_dual(p)
    }
    fn eval_rule_lifted2(rule: &dyn DynRule, p: &[Dual2]) -> Result<Dual2> {
        rule.eval_dual2(p)
    }
    fn eval_vector_rule_lifted2(rule: &dyn DynVectorRule, p: &[Dual2]) -> Result<Vec<Dual2>> {
        rule.eval_dual2(p)
    }
}

/// A dual number: value plus partial derivatives with respect to each active variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual<T = f64> {
    pub value: T,
    pub partials: Vec<T>,
}

/// Second-order dual used for Hessian blocks.
pub type Dual2 = Dual<Dual<f64>>;

impl<T: Real> Dual<T> {
    pub fn constant(value: T) -> Self {
        Dual {
            value,
            partials: Vec::new(),
        }
    }

    /// Variable `index` out of `dim` active variables, seeded with a unit partial.
    pub fn variable(value: T, index: usize, dim: usize) -> Self {
        let partials = (0..dim)
            .map(|j| T::constant(if j == index { 1.0 } else { 0.0 }))
            .collect();
        Dual { value, partials }
    }

    /// Partial with respect to variable `j`; zero when not stored.
    pub fn partial(&self, j: usize) -> T {
        self.partials
            .get(j)
            .cloned()
            .unwrap_or_else(|| T::constant(0.0))
    }

    fn chain(&self, value: T, derivative: T) -> Self {
        Dual {
            value,
            partials: self
                .partials
                .iter()
                .map(|d| derivative.clone() * d.clone())
                .collect(),
        }
    }
}

/// Seeds a point as independent variables.
pub fn seed(point: &[f64]) -> Vec<Dual> {
    let n = point.len();
    point
        .iter()
        .enumerate()
        .map(|(j, &v)| Dual::variable(v, j, n))
        .collect()
}

fn zip_partials<T: Real>(
    a: &[T],
    b: &[T],
    both: impl Fn(&T, &T) -> T,
    left: impl Fn(&T) -> T,
    right: impl Fn(&T) -> T,
) -> Vec<T> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) => both(x, y),
            (Some(x), None) => left(x),
            (None, Some(y)) => right(y),
            (None, None) => unreachable!(),
        })
        .collect()
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let partials = zip_partials(
            &self.partials,
            &rhs.partials,
            |x, y| x.clone() + y.clone(),
            |x| x.clone(),
            |y| y.clone(),
        );
        Dual {
            value: self.value + rhs.value,
            partials,
        }
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let partials = zip_partials(
            &self.partials,
            &rhs.partials,
            |x, y| x.clone() - y.clone(),
            |x| x.clone(),
            |y| -y.clone(),
        );
        Dual {
            value: self.value - rhs.value,
            partials,
        }
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (u, v) = (&self.value, &rhs.value);
        let partials = zip_partials(
            &self.partials,
            &rhs.partials,
            |du, dv| u.clone() * dv.clone() + v.clone() * du.clone(),
            |du| v.clone() * du.clone(),
            |dv| u.clone() * dv.clone(),
        );
        Dual {
            value: self.value * rhs.value,
            partials,
        }
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.value.clone() / rhs.value.clone();
        let v = &rhs.value;
        let partials = zip_partials(
            &self.partials,
            &rhs.partials,
            |du, dv| (du.clone() - q.clone() * dv.clone()) / v.clone(),
            |du| du.clone() / v.clone(),
            |dv| -(q.clone() * dv.clone()) / v.clone(),
        );
        Dual { value: q, partials }
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual {
            value: -self.value,
            partials: self.partials.into_iter().map(|d| -d).collect(),
        }
    }
}

impl<T: Real> Real for Dual<T> {
    fn constant(v: f64) -> Self {
        Dual::constant(T::constant(v))
    }
    fn value(&self) -> f64 {
        self.value.value()
    }
    fn has_partials(&self) -> bool {
        !self.partials.is_empty() || self.value.has_partials()
    }
    fn all_finite(&self) -> bool {
        self.value.all_finite() && self.partials.iter().all(Real::all_finite)
    }
    fn sin(&self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn tan(&self) -> Self {
        let t = self.value.tan();
        let d = T::constant(1.0) + t.clone() * t.clone();
        self.chain(t, d)
    }
    fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e.clone(), e)
    }
    fn ln(&self) -> Self {
        self.chain(self.value.ln(), T::constant(1.0) / self.value.clone())
    }
    fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        let d = T::constant(0.5) / s.clone();
        self.chain(s, d)
    }
    fn abs(&self) -> Self {
        let v = self.value.value();
        let sign = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.value.abs(), T::constant(sign))
    }
    fn powi(&self, n: i32) -> Self {
        let d = match n {
            0 => T::constant(0.0),
            1 => T::constant(1.0),
            _ => self.value.powi(n - 1).scale(n as f64),
        };
        self.chain(self.value.powi(n), d)
    }
    fn powf(&self, e: f64) -> Self {
        let d = self.value.powf(e - 1.0).scale(e);
        self.chain(self.value.powf(e), d)
    }
    fn eval_rule(rule: &dyn DynRule, p: &[Self]) -> Result<Self> {
        T::eval_rule_lifted(rule, p)
    }
    fn eval_rule_lifted(rule: &dyn DynRule, p: &[Dual<Self>]) -> Result<Dual<Self>> {
        T::eval_rule_lifted2(rule, p)
    }
    fn eval_vector_rule(rule: &dyn DynVectorRule, p: &[Self]) -> Result<Vec<Self>> {
        T::eval_vector_rule_lifted(rule, p)
    }
    fn eval_vector_rule_lifted(
        rule: &dyn DynVectorRule,
        p: &[Dual<Self>],
    ) -> Result<Vec<Dual<Self>>> {
        T::eval_vector_rule_lifted2(rule, p)
    }
    fn eval_rule_lifted2(_rule: &dyn DynRule, _p: &[Dual<Dual<Self>>]) -> Result<Dual<Dual<Self>>> {
        Err(nesting_error())
    }
    fn eval_vector_rule_lifted2(
        _rule: &dyn DynVectorRule,
        _p: &[Dual<Dual<Self>>],
    ) -> Result<Vec<Dual<Dual<Self>>>> {
        Err(nesting_error())
    }
}

fn nesting_error() -> Error {
    Error::Unsupported("dual numbers nest at most two levels".into())
}
