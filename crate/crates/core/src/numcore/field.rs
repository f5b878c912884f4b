//! Differentiable scalar and matrix fields.
//!
//! Rules are written once, generically over [`Real`], and erased behind
//! [`DynRule`] / [`DynVectorRule`] so fields can be stored, composed and
//! shared across threads.

use std::fmt;
use std::sync::Arc;

use super::dual::{seed, Dual, Dual2, Real};
use super::matrix::Matrix;
use crate::error::{check_len, Error, Result};

/// A scalar evaluation rule generic over the scalar type.
pub trait FieldRule: Send + Sync {
    fn apply<S: Real>(&self, p: &[S]) -> Result<S>;
}

/// Object-safe form of [`FieldRule`].
pub trait DynRule: Send + Sync {
    fn eval_f64(&self, p: &[f64]) -> Result<f64>;
    fn eval_dual(&self, p: &[Dual]) -> Result<Dual>;
    fn eval_dual2(&self, p: &[Dual2]) -> Result<Dual2>;
}

impl<R: FieldRule> DynRule for R {
    fn eval_f64(&self, p: &[f64]) -> Result<f64> {
        self.apply(p)
    }
    fn eval_dual(&self, p: &[Dual]) -> Result<Dual> {
        self.apply(p)
    }
    fn eval_dual2(&self, p: &[Dual2]) -> Result<Dual2> {
        self.apply(p)
    }
}

/// A vector-valued rule (matrices are returned row-major).
pub trait VectorRule: Send + Sync {
    fn apply<S: Real>(&self, p: &[S]) -> Result<Vec<S>>;
}

pub trait DynVectorRule: Send + Sync {
    fn eval_f64(&self, p: &[f64]) -> Result<Vec<f64>>;
    fn eval_dual(&self, p: &[Dual]) -> Result<Vec<Dual>>;
    fn eval_dual2(&self, p: &[Dual2]) -> Result<Vec<Dual2>>;
}

impl<R: VectorRule> DynVectorRule for R {
    fn eval_f64(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.apply(p)
    }
    fn eval_dual(&self, p: &[Dual]) -> Result<Vec<Dual>> {
        self.apply(p)
    }
    fn eval_dual2(&self, p: &[Dual2]) -> Result<Vec<Dual2>> {
        self.apply(p)
    }
}

/// A scalar function of base coordinates followed by fiber coordinates.
#[derive(Clone)]
pub struct ScalarField {
    base: Vec<String>,
    fiber: Vec<String>,
    rule: Arc<dyn DynRule>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("base", &self.base)
            .field("fiber", &self.fiber)
            .finish_non_exhaustive()
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl ScalarField {
    pub fn new(base: &[&str], fiber: &[&str], rule: impl FieldRule + 'static) -> Self {
        ScalarField {
            base: names(base),
            fiber: names(fiber),
            rule: Arc::new(rule),
        }
    }

    pub fn from_dyn(base: Vec<String>, fiber: Vec<String>, rule: Arc<dyn DynRule>) -> Self {
        ScalarField { base, fiber, rule }
    }

    pub fn base_names(&self) -> &[String] {
        &self.base
    }

    pub fn fiber_names(&self) -> &[String] {
        &self.fiber
    }

    pub fn arity(&self) -> usize {
        self.base.len() + self.fiber.len()
    }

    pub fn rule(&self) -> &Arc<dyn DynRule> {
        &self.rule
    }

    /// Evaluates at a point of any supported scalar type.
    pub fn apply<S: Real>(&self, p: &[S]) -> Result<S> {
        check_len("scalar field arity", self.arity(), p.len())?;
        S::eval_rule(&*self.rule, p)
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        let v = self.apply(p)?;
        if !v.is_finite() {
            return Err(Error::NumericDomain(format!("field evaluated to {v}")));
        }
        Ok(v)
    }

    /// Pointwise sum `self + other`; `other` may depend only on the first
    /// `other.arity()` coordinates of this field.
    pub fn plus(&self, other: &ScalarField) -> Result<ScalarField> {
        if other.arity() > self.arity() {
            return Err(Error::Validation(
                "summand depends on more coordinates than the field".into(),
            ));
        }
        Ok(ScalarField {
            base: self.base.clone(),
            fiber: self.fiber.clone(),
            rule: Arc::new(SumRule {
                left: self.rule.clone(),
                right: other.rule.clone(),
                right_arity: other.arity(),
            }),
        })
    }
}

struct SumRule {
    left: Arc<dyn DynRule>,
    right: Arc<dyn DynRule>,
    right_arity: usize,
}

impl FieldRule for SumRule {
    fn apply<S: Real>(&self, p: &[S]) -> Result<S> {
        let l = S::eval_rule(&*self.left, p)?;
        let r = S::eval_rule(&*self.right, &p[..self.right_arity])?;
        Ok(l + r)
    }
}

/// A field of `rows x cols` matrices over a coordinate chart.
#[derive(Clone)]
pub struct MatrixField {
    dim: usize,
    rows: usize,
    cols: usize,
    rule: Arc<dyn DynVectorRule>,
}

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixField")
            .field("dim", &self.dim)
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl MatrixField {
    pub fn new(dim: usize, rows: usize, cols: usize, rule: impl VectorRule + 'static) -> Self {
        MatrixField {
            dim,
            rows,
            cols,
            rule: Arc::new(rule),
        }
    }

    pub fn from_dyn(dim: usize, rows: usize, cols: usize, rule: Arc<dyn DynVectorRule>) -> Self {
        MatrixField {
            dim,
            rows,
            cols,
            rule,
        }
    }

    /// A field that does not depend on the point.
    pub fn constant(dim: usize, m: Matrix) -> Self {
        let (rows, cols) = (m.rows(), m.cols());
        MatrixField::new(dim, rows, cols, ConstantRule(m.entries().to_vec()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Pointwise product `self(q) * other(q)`.
    pub fn mul(&self, other: &MatrixField) -> Result<MatrixField> {
        if self.cols != other.rows || self.dim != other.dim {
            return Err(Error::Dimension {
                context: "matrix field product",
                expected: self.cols,
                got: other.rows,
            });
        }
        Ok(MatrixField::new(
            self.dim,
            self.rows,
            other.cols,
            ProductRule {
                left: self.clone(),
                right: other.clone(),
            },
        ))
    }

    /// Appends zero columns up to `cols` total.
    pub fn pad_columns(&self, cols: usize) -> Result<MatrixField> {
        if cols < self.cols {
            return Err(Error::Dimension {
                context: "padded column count",
                expected: self.cols,
                got: cols,
            });
        }
        Ok(MatrixField::new(
            self.dim,
            self.rows,
            cols,
            PadRule {
                inner: self.clone(),
                cols,
            },
        ))
    }

    /// The first `cols` columns.
    pub fn leading_columns(&self, cols: usize) -> Result<MatrixField> {
        if cols > self.cols {
            return Err(Error::Dimension {
                context: "leading column count",
                expected: self.cols,
                got: cols,
            });
        }
        Ok(MatrixField::new(
            self.dim,
            self.rows,
            cols,
            PadRule {
                inner: self.clone(),
                cols,
            },
        ))
    }

    pub fn apply<S: Real>(&self, q: &[S]) -> Result<Vec<S>> {
        check_len("matrix field point", self.dim, q.len())?;
        let v = S::eval_vector_rule(&*self.rule, q)?;
        check_len("matrix field entries", self.rows * self.cols, v.len())?;
        Ok(v)
    }

    pub fn eval(&self, q: &[f64]) -> Result<Matrix> {
        let v = self.apply(q)?;
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::NumericDomain(format!(
                "matrix entry evaluated to {bad}"
            )));
        }
        Matrix::from_row_major(self.rows, self.cols, v)
    }

    /// Value and partials `d[l]` (one matrix per coordinate) at `q`.
    pub fn eval_with_partials(&self, q: &[f64]) -> Result<(Matrix, Vec<Matrix>)> {
        let duals = self.apply(&seed(q))?;
        let value = Matrix::from_row_major(
            self.rows,
            self.cols,
            duals.iter().map(|d| d.value).collect(),
        )?;
        let partials = (0..self.dim)
            .map(|l| {
                Matrix::from_row_major(
                    self.rows,
                    self.cols,
                    duals.iter().map(|d| d.partial(l)).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((value, partials))
    }
}

struct ProductRule {
    left: MatrixField,
    right: MatrixField,
}

impl VectorRule for ProductRule {
    fn apply<S: Real>(&self, q: &[S]) -> Result<Vec<S>> {
        let a = self.left.apply(q)?;
        let b = self.right.apply(q)?;
        let (n, inner, p) = (self.left.rows, self.left.cols, self.right.cols);
        let mut out = Vec::with_capacity(n * p);
        for i in 0..n {
            for j in 0..p {
                let mut acc = S::constant(0.0);
                for l in 0..inner {
                    acc = acc + a[i * inner + l].clone() * b[l * p + j].clone();
                }
                out.push(acc);
            }
        }
        Ok(out)
    }
}

/// Copies the inner field into `cols` columns, truncating or zero-filling.
struct PadRule {
    inner: MatrixField,
    cols: usize,
}

impl VectorRule for PadRule {
    fn apply<S: Real>(&self, q: &[S]) -> Result<Vec<S>> {
        let v = self.inner.apply(q)?;
        let c = self.inner.cols;
        let mut out = Vec::with_capacity(self.inner.rows * self.cols);
        for i in 0..self.inner.rows {
            for j in 0..self.cols {
                out.push(if j < c {
                    v[i * c + j].clone()
                } else {
                    S::constant(0.0)
                });
            }
        }
        Ok(out)
    }
}

struct ConstantRule(Vec<f64>);

impl VectorRule for ConstantRule {
    fn apply<S: Real>(&self, _p: &[S]) -> Result<Vec<S>> {
        Ok(self.0.iter().map(|&v| S::constant(v)).collect())
    }
}

fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::NumericDomain(format!("{what} evaluated to {v}"))),
        None => Ok(()),
    }
}

/// Gradient of `f` at `p` by forward-mode differentiation.
pub fn grad(f: &ScalarField, p: &[f64]) -> Result<Vec<f64>> {
    check_len("grad point", f.arity(), p.len())?;
    let r = f.apply(&seed(p))?;
    let g: Vec<f64> = (0..p.len()).map(|j| r.partial(j)).collect();
    ensure_finite(&[r.value], "field")?;
    ensure_finite(&g, "gradient")?;
    Ok(g)
}

/// Value and gradient in one pass.
pub fn value_and_grad(f: &ScalarField, p: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len("grad point", f.arity(), p.len())?;
    let r = f.apply(&seed(p))?;
    let g: Vec<f64> = (0..p.len()).map(|j| r.partial(j)).collect();
    ensure_finite(&[r.value], "field")?;
    ensure_finite(&g, "gradient")?;
    Ok((r.value, g))
}

/// Second derivatives of `f` with respect to the variables listed in `idx`.
pub fn hessian_block(f: &ScalarField, p: &[f64], idx: &[usize]) -> Result<Matrix> {
    check_len("hessian point", f.arity(), p.len())?;
    if let Some(&bad) = idx.iter().find(|&&i| i >= p.len()) {
        return Err(Error::Dimension {
            context: "hessian index",
            expected: p.len(),
            got: bad,
        });
    }
    let k = idx.len();
    let point: Vec<Dual2> = p
        .iter()
        .enumerate()
        .map(|(j, &v)| match idx.iter().position(|&i| i == j) {
            Some(s) => Dual {
                value: Dual::variable(v, s, k),
                partials: (0..k)
                    .map(|t| Dual::constant(if t == s { 1.0 } else { 0.0 }))
                    .collect(),
            },
            None => Dual::constant(Dual::constant(v)),
        })
        .collect();
    let r = f.apply(&point)?;
    let mut h = Matrix::zeros(k, k);
    for a in 0..k {
        let row = r.partial(a);
        for b in 0..k {
            h[(a, b)] = row.partial(b);
        }
    }
    ensure_finite(h.entries(), "hessian")?;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct QSquaredEta;
    impl FieldRule for QSquaredEta {
        fn apply<S: Real>(&self, p: &[S]) -> Result<S> {
            Ok(p[0].clone() * p[0].clone() * p[1].clone())
        }
    }

    struct Five;
    impl FieldRule for Five {
        fn apply<S: Real>(&self, _p: &[S]) -> Result<S> {
            Ok(S::constant(5.0))
        }
    }

    struct HalfSquares;
    impl FieldRule for HalfSquares {
        fn apply<S: Real>(&self, p: &[S]) -> Result<S> {
            Ok((p[0].clone() * p[0].clone() + p[1].clone() * p[1].clone()).scale(0.5))
        }
    }

    struct Product;
    impl FieldRule for Product {
        fn apply<S: Real>(&self, p: &[S]) -> Result<S> {
            Ok(p[0].clone() * p[1].clone())
        }
    }

    struct LogField;
    impl FieldRule for LogField {
        fn apply<S: Real>(&self, p: &[S]) -> Result<S> {
            Ok(p[0].ln())
        }
    }

    #[test]
    fn grad_of_polynomial() {
        let f = ScalarField::new(&["q"], &["eta"], QSquaredEta);
        assert_eq!(grad(&f, &[1.0, 3.0]).unwrap(), vec![6.0, 1.0]);
    }

    #[test]
    fn grad_of_constant_is_zero() {
        let f = ScalarField::new(&["a", "b", "c"], &[], Five);
        assert_eq!(grad(&f, &[1.0, -2.0, 7.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn grad_errors() {
        let f = ScalarField::new(&["q"], &["eta"], QSquaredEta);
        assert!(matches!(grad(&f, &[1.0]), Err(Error::Dimension { .. })));
        let g = ScalarField::new(&["u"], &[], LogField);
        assert!(matches!(grad(&g, &[-1.0]), Err(Error::NumericDomain(_))));
    }

    #[test]
    fn hessian_blocks_of_quadratics() {
        let f = ScalarField::new(&[], &["u", "v"], HalfSquares);
        assert_eq!(
            hessian_block(&f, &[0.3, -0.7], &[0, 1]).unwrap(),
            Matrix::identity(2)
        );
        let g = ScalarField::new(&[], &["u", "v"], Product);
        let h = hessian_block(&g, &[2.0, 5.0], &[0, 1]).unwrap();
        assert_eq!(h.entries(), &[0.0, 1.0, 1.0, 0.0]);
        let sub = hessian_block(&g, &[2.0, 5.0], &[1]).unwrap();
        assert_eq!(sub.entries(), &[0.0]);
    }

    #[test]
    fn sum_of_fields() {
        let base = ScalarField::new(&["q"], &["eta"], QSquaredEta);
        let extra = ScalarField::new(&["q"], &[], LogField);
        let s = base.plus(&extra).unwrap();
        assert_eq!(s.eval(&[1.0, 3.0]).unwrap(), 3.0);
        assert_eq!(grad(&s, &[1.0, 3.0]).unwrap(), vec![7.0, 1.0]);
    }

    #[test]
    fn matrix_field_partials() {
        struct Rot;
        impl VectorRule for Rot {
            fn apply<S: Real>(&self, q: &[S]) -> Result<Vec<S>> {
                let (c, s) = (q[0].cos(), q[0].sin());
                Ok(vec![c.clone(), -s.clone(), s, c])
            }
        }
        let m = MatrixField::new(1, 2, 2, Rot);
        let (v, d) = m.eval_with_partials(&[0.0]).unwrap();
        assert_eq!(v, Matrix::identity(2));
        assert_eq!(d[0].entries(), &[-0.0, -1.0, 1.0, -0.0]);
    }
}
