use nonholo_core::numcore::{FieldRule, NewtonReport};
use nonholo_core::systems::{admissible_hamiltonian, central_difference};
use nonholo_core::{
    build, grad, hessian_block, mat_inverse, solve_linear, Matrix, Real, Result, ScalarField,
    CATALOG,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn restricted_skater_gradient() {
    let spec = build("skater_free", &[]).unwrap();
    let h0 = admissible_hamiltonian(&spec).unwrap();
    assert_eq!(
        grad(&h0, &[0.0, 0.0, 0.0, 2.0, 3.0]).unwrap(),
        vec![0.0, 0.0, 0.0, 2.0, 3.0]
    );
}

#[test]
fn free_ball_transverse_hessian() {
    let spec = build("ball_free", &[]).unwrap();
    let p = [0.3, 0.1, 1.0, -1.0, 0.5, 0.2, 0.4];
    let h = hessian_block(&spec.hamiltonian, &p, &[5, 6]).unwrap();
    assert_eq!(h, Matrix::from_diagonal(&[0.5, 0.5]));
}

#[test]
fn newton_recovers_charged_skater_consistency() {
    use nonholo_core::ConsistencySolution;
    let spec = build("skater_charged", &[]).unwrap();
    let eta3 = spec
        .dirac
        .solve_consistency(
            &spec.hamiltonian,
            &ConsistencySolution::Newton,
            &[2.0, 0.0, 0.3],
            &[0.1, 0.2],
            &[0.0],
        )
        .unwrap();
    assert!((eta3[0] - 2.0 * 0.3f64.cos()).abs() < 1e-12);
}

#[test]
fn newton_report_counts_iterations() {
    let r: NewtonReport = nonholo_core::numcore::newton_solve(
        |x| {
            Ok((
                vec![x[0] * x[0] - 4.0],
                Matrix::from_diagonal(&[2.0 * x[0]]),
            ))
        },
        &[3.0],
        1e-12,
        50,
    )
    .unwrap();
    assert!(r.iterations > 1 && r.residual <= 1e-12);
}

#[test]
fn every_hamiltonian_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in CATALOG {
        let spec = build(name, &[]).unwrap();
        let h = &spec.hamiltonian;
        for _ in 0..100 {
            let p: Vec<f64> = (0..h.arity()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let g = grad(h, &p).unwrap();
            let fd = central_difference(h, &p, 1e-6).unwrap();
            for (a, b) in g.iter().zip(&fd) {
                let rel = (a - b).abs() / a.abs().max(1.0);
                assert!(rel <= 1e-6, "{name}: {a} vs {b}");
            }
        }
    }
}

/// `sum_j c_j * prod_i p_i^e_ij` over three variables.
#[derive(Clone, Debug)]
struct Polynomial {
    terms: Vec<(f64, [i32; 3])>,
}

impl FieldRule for Polynomial {
    fn apply<S: Real>(&self, p: &[S]) -> Result<S> {
        let mut acc = S::constant(0.0);
        for (c, e) in &self.terms {
            let mut t = S::constant(*c);
            for i in 0..3 {
                t = t * p[i].powi(e[i]);
            }
            acc = acc + t;
        }
        Ok(acc)
    }
}

fn polynomial() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((-3.0..3.0f64, prop::array::uniform3(0..4i32)), 1..6)
        .prop_map(|terms| Polynomial { terms })
}

fn well_conditioned(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-0.3..0.3f64, n * n).prop_map(move |mut v| {
        for i in 0..n {
            v[i * n + i] += 2.0;
        }
        Matrix::from_row_major(n, n, v).unwrap()
    })
}

proptest! {
    #[test]
    fn hessian_is_symmetric(poly in polynomial(), p in prop::array::uniform3(-1.5..1.5f64)) {
        let f = ScalarField::new(&["a", "b", "c"], &[], poly);
        let h = hessian_block(&f, &p, &[0, 1, 2]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((h[(i, j)] - h[(j, i)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_differences_on_polynomials(poly in polynomial(), p in prop::array::uniform3(-1.5..1.5f64)) {
        let f = ScalarField::new(&["a", "b", "c"], &[], poly);
        let g = grad(&f, &p).unwrap();
        let fd = central_difference(&f, &p, 1e-6).unwrap();
        for (a, b) in g.iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
        }
    }

    #[test]
    fn double_inverse_is_identity(a in (2usize..6).prop_flat_map(well_conditioned)) {
        let back = mat_inverse(&mat_inverse(&a).unwrap()).unwrap();
        for (x, y) in back.entries().iter().zip(a.entries()) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn solve_has_small_residual(a in well_conditioned(5), b in prop::collection::vec(-5.0..5.0f64, 5)) {
        let x = solve_linear(&a, &b).unwrap();
        let ax = a.mul_vec(&x).unwrap();
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (l, r) in ax.iter().zip(&b) {
            prop_assert!((l - r).abs() <= 1e-12 * (a.norm_inf() * xn + bn));
        }
    }
}
