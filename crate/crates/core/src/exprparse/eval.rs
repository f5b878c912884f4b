use std::collections::BTreeSet;

use super::parser::{free_variables, parse_str, BinaryOp, ExprNode, Function, UnaryOp};
use crate::error::{Error, Result};
use crate::numcore::{FieldRule, Real, ScalarField};

fn domain(msg: impl Into<String>) -> Error {
    Error::NumericDomain(msg.into())
}

/// Evaluates `e`, resolving variables through `lookup`.
pub fn eval_with<S: Real>(e: &ExprNode, lookup: &dyn Fn(&str) -> Option<S>) -> Result<S> {
    match e {
        ExprNode::Constant(c) => Ok(S::constant(*c)),
        ExprNode::Variable(name) => {
            lookup(name).ok_or_else(|| Error::UnboundVariable(name.clone()))
        }
        ExprNode::Unary(UnaryOp::Neg, c) => Ok(-eval_with(c, lookup)?),
        ExprNode::Binary(op, l, r) => {
            let a = eval_with(l, lookup)?;
            let b = eval_with(r, lookup)?;
            match op {
                BinaryOp::Add => Ok(a + b),
                BinaryOp::Sub => Ok(a - b),
                BinaryOp::Mul => Ok(a * b),
                BinaryOp::Div => {
                    if b.value() == 0.0 {
                        return Err(domain("division by zero"));
                    }
                    Ok(a / b)
                }
                BinaryOp::Pow => power(a, b),
            }
        }
        ExprNode::Call(func, args) => {
            let x = eval_with(&args[0], lookup)?;
            let v = x.value();
            match func {
                Function::Sin => Ok(x.sin()),
                Function::Cos => Ok(x.cos()),
                Function::Tan => Ok(x.tan()),
                Function::Exp => Ok(x.exp()),
                Function::Abs => Ok(x.abs()),
                Function::Log => {
                    if !(v > 0.0) {
                        return Err(domain(format!("log of non-positive value {v}")));
                    }
                    Ok(x.ln())
                }
                Function::Sqrt => {
                    if v < 0.0 {
                        return Err(domain(format!("sqrt of negative value {v}")));
                    }
                    Ok(x.sqrt())
                }
            }
        }
    }
}

fn power<S: Real>(base: S, exponent: S) -> Result<S> {
    let (b, e) = (base.value(), exponent.value());
    if !exponent.has_partials() {
        if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
            if b == 0.0 && e < 0.0 {
                return Err(domain("zero raised to a negative power"));
            }
            return Ok(base.powi(e as i32));
        }
        if b < 0.0 {
            return Err(domain(format!(
                "negative base {b} with non-integer exponent {e}"
            )));
        }
        return Ok(base.powf(e));
    }
    if !(b > 0.0) {
        return Err(domain(format!(
            "base {b} must be positive for a variable exponent"
        )));
    }
    Ok((exponent * base.ln()).exp())
}

/// Evaluates `e` with named bindings.
pub fn eval_expr<S: Real>(e: &ExprNode, bindings: &[(&str, S)]) -> Result<S> {
    eval_with(e, &|name| {
        bindings
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v.clone())
    })
}

/// An expression bound to an ordered list of coordinate names.
#[derive(Clone, Debug)]
pub struct ExprField {
    expr: ExprNode,
    names: Vec<String>,
}

impl ExprField {
    /// Fails if `expr` references a name outside `names`.
    pub fn new(expr: ExprNode, names: &[String]) -> Result<Self> {
        if let Some(bad) = free_variables(&expr)
            .into_iter()
            .find(|v| !names.contains(v))
        {
            return Err(Error::UnboundVariable(bad));
        }
        Ok(ExprField {
            expr,
            names: names.to_vec(),
        })
    }

    pub fn expr(&self) -> &ExprNode {
        &self.expr
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        free_variables(&self.expr)
    }
}

impl FieldRule for ExprField {
    fn apply<S: Real>(&self, p: &[S]) -> Result<S> {
        eval_with(&self.expr, &|name| {
            self.names
                .iter()
                .position(|n| n == name)
                .and_then(|i| p.get(i).cloned())
        })
    }
}

/// Parses `text` into a scalar field over `base` coordinates (no fiber part).
pub fn expr_scalar_field(text: &str, base: &[String]) -> Result<ScalarField> {
    let field = ExprField::new(parse_str(text)?, base)?;
    Ok(ScalarField::from_dyn(
        base.to_vec(),
        Vec::new(),
        std::sync::Arc::new(field),
    ))
}
