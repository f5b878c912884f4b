use nonholo_core::numcore::FieldRule;
use nonholo_core::systems::{admissible_hamiltonian, ball_algebroid, skater_frame};
use nonholo_core::{
    build, grad, legendre_map, oracle_mechanical, simulate, FrameField, Matrix, MatrixField,
    PhaseState, Real, Result, ScalarField, SkewAlgebroid, StructureTensor, VelocityState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ball structure constants expanded by hand from the so(3) brackets, with
/// `ℓx = (k² f2 + R f5)/(k²+R²)` and `ℓy = (k² f1 − R f4)/(k²+R²)`. 1-based.
fn ball_by_hand(k2: f64, r: f64) -> StructureTensor {
    let s = k2 + r * r;
    let mut c = StructureTensor::zeros(5);
    let entries = [
        (3, 1, 2, 1.0),
        (2, 1, 3, -k2 / s),
        (5, 1, 3, -r / s),
        (1, 2, 3, k2 / s),
        (4, 2, 3, -r / s),
        (3, 1, 5, r),
        (3, 2, 4, r),
        (2, 3, 4, -r * k2 / s),
        (5, 3, 4, -r * r / s),
        (1, 3, 5, -r * k2 / s),
        (4, 3, 5, r * r / s),
        (3, 4, 5, -r * r),
    ];
    for (i, j, k, v) in entries {
        c.set_pair(i - 1, j - 1, k - 1, v);
    }
    c
}

#[test]
fn ball_structure_matches_hand_expansion() {
    for (k2, r) in [(1.0, 1.0), (0.4, 2.0)] {
        let alg = ball_algebroid(k2, r).unwrap();
        let c = alg.structure(&[0.3, -0.8]).unwrap();
        let diff = c.max_abs_diff(&ball_by_hand(k2, r));
        assert!(diff <= 1e-13, "(k2, R) = ({k2}, {r}): {diff:e}");
        let rho = alg.anchor(&[0.0, 0.0]).unwrap();
        assert_eq!(
            rho.entries(),
            &[r, 0.0, 0.0, k2, 0.0, 0.0, -r, 0.0, 0.0, k2]
        );
    }
}

#[test]
fn skater_tangent_algebroid() {
    let alg = SkewAlgebroid::from_tangent_frame(&skater_frame());
    let rho = alg.anchor(&[0.0, 0.0, 0.0]).unwrap();
    assert_eq!(rho.column(1), vec![0.0, 0.0, 1.0]);
    let c = alg.structure(&[1.0, 2.0, 0.4]).unwrap();
    assert!((c.get(2, 0, 1) - 1.0).abs() < 1e-15 && (c.get(0, 1, 2) - 1.0).abs() < 1e-15);
    let trivial = SkewAlgebroid::from_tangent_frame(&FrameField::identity(2));
    assert_eq!(trivial.anchor(&[3.0, 4.0]).unwrap(), Matrix::identity(2));
    assert_eq!(
        trivial.structure(&[3.0, 4.0]).unwrap(),
        StructureTensor::zeros(2)
    );
}

#[test]
fn frame_change_reproduces_tangent_formula() {
    let fr = skater_frame();
    let coordinate = SkewAlgebroid::from_tangent_frame(&FrameField::identity(3));
    let changed = coordinate.change_frame(fr.rho()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect();
        assert_eq!(
            changed.structure(&q).unwrap(),
            fr.structure_functions_tangent(&q).unwrap()
        );
        assert_eq!(changed.anchor(&q).unwrap(), fr.frame_matrix(&q).unwrap());
    }
}

#[test]
fn singular_frame_change_fails() {
    let alg = SkewAlgebroid::from_tangent_frame(&FrameField::identity(2));
    let bad = alg
        .change_frame(&MatrixField::constant(2, Matrix::zeros(2, 2)))
        .unwrap();
    assert!(bad.structure(&[0.0, 0.0]).is_err());
}

fn restricted(name: &str) -> (SkewAlgebroid, ScalarField) {
    let spec = build(name, &[]).unwrap();
    let alg = spec.dirac.algebroid().restrict(spec.k()).unwrap();
    (alg, admissible_hamiltonian(&spec).unwrap())
}

#[test]
fn free_and_slope_skater_hamiltonian_fields() {
    let s = PhaseState::full(vec![0.0, 0.0, 0.0], vec![1.0, 1.0]);
    let (alg, h) = restricted("skater_free");
    let (qd, ed) = alg.hamiltonian_vector_field(&h, &s).unwrap();
    assert_eq!([qd, ed].concat(), vec![1.0, 0.0, 1.0, 0.0, 0.0]);
    let (alg, h) = restricted("skater_slope");
    let (_, ed) = alg.hamiltonian_vector_field(&h, &s).unwrap();
    assert_eq!(ed[0], -1.0);
}

#[test]
fn skater_lagrangian_examples() {
    let spec = build("skater_free", &[]).unwrap();
    let alg = spec.dirac.algebroid().restrict(2).unwrap();
    let l = spec.lagrangian.clone().unwrap();
    let (eta, qdot, etadot) = alg
        .lagrangian_dynamics(&l, &VelocityState::new(vec![0.0; 3], vec![1.0, 0.0]))
        .unwrap();
    assert_eq!(eta, vec![1.0, 0.0]);
    assert_eq!(qdot, vec![1.0, 0.0, 0.0]);
    assert_eq!(etadot, vec![0.0, 0.0]);

    let heavy = build("skater_free", &[("k2".into(), 4.0)]).unwrap();
    let p = legendre_map(
        heavy.lagrangian.as_ref().unwrap(),
        &VelocityState::new(vec![0.0; 3], vec![1.0, 1.0]),
    )
    .unwrap();
    assert_eq!(p.eta, vec![1.0, 4.0]);
}

fn random_velocity(rng: &mut ChaCha8Rng, m: usize, k: usize) -> VelocityState {
    VelocityState::new(
        (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect(),
    )
}

#[test]
fn legendre_and_hamilton_sides_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for name in ["skater_free", "skater_slope", "ball_free"] {
        let spec = build(name, &[]).unwrap();
        let (alg, h) = restricted(name);
        let l = spec.lagrangian.clone().unwrap();
        for _ in 0..100 {
            let vs = random_velocity(&mut rng, spec.base_dim(), spec.k());
            let (eta, qd_l, ed_l) = alg.lagrangian_dynamics(&l, &vs).unwrap();
            let s = legendre_map(&l, &vs).unwrap();
            assert_eq!(s.eta, eta);
            let (qd_h, ed_h) = alg.hamiltonian_vector_field(&h, &s).unwrap();
            for (a, b) in qd_l.iter().chain(&ed_l).zip(qd_h.iter().chain(&ed_h)) {
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "{name}: {a} vs {b}"
                );
            }
            // the explicit metric form of the same dynamics
            let rs = PhaseState::reduced(s.q.clone(), s.eta.clone());
            let (qd_o, ed_o) = oracle_mechanical(&alg, &spec.metric, &rs).unwrap();
            for (a, b) in qd_l.iter().chain(&ed_l).zip(qd_o.iter().chain(&ed_o)) {
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "{name}: {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn hamiltonian_field_conserves_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for name in nonholo_core::CATALOG {
        let spec = build(name, &[]).unwrap();
        let alg = spec.dirac.algebroid();
        for _ in 0..100 {
            let q: Vec<f64> = (0..alg.base_dim())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect();
            let eta: Vec<f64> = (0..alg.rank()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let s = PhaseState::full(q, eta);
            let (qd, ed) = alg.hamiltonian_vector_field(&spec.hamiltonian, &s).unwrap();
            let g = grad(&spec.hamiltonian, &s.point()).unwrap();
            let terms: Vec<f64> = g
                .iter()
                .zip(qd.iter().chain(&ed))
                .map(|(a, b)| a * b)
                .collect();
            let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
            let total: f64 = terms.iter().sum();
            assert!(total.abs() <= 1e-12 * scale, "{name}: {total:e}");
        }
    }
}

#[test]
fn euler_lagrange_residual_is_second_order() {
    let spec = build("skater_slope", &[]).unwrap();
    let (alg, _) = restricted("skater_slope");
    let l = spec.lagrangian.clone().unwrap();
    let ic = PhaseState::reduced(vec![0.0, 0.0, 0.3], vec![1.0, 0.7]);
    let residual = |stride: usize| {
        let traj = simulate(&spec, &ic, 2.0, 1e-3, stride).unwrap();
        // momenta to velocities: z^a = ∂H/∂η_a
        let samples: Vec<VelocityState> = traj
            .states
            .iter()
            .map(|s| {
                let m = spec.param("m").unwrap();
                let k2 = spec.param("k2").unwrap();
                VelocityState::new(s.q.clone(), vec![s.eta[0] / m, s.eta[1] / (m * k2)])
            })
            .collect();
        alg.euler_lagrange_residual(&l, &samples, stride as f64 * 1e-3)
            .unwrap()
    };
    let coarse = residual(40);
    let fine = residual(20);
    let ratio = coarse / fine;
    assert!(
        (3.5..=4.5).contains(&ratio),
        "ratio {ratio} ({coarse:e} / {fine:e})"
    );
}

/// `L = (m/2) g_ab x^a x^b + A_a x^a` for the charged skater on its admissible block.
struct ChargedLagrangian {
    be: f64,
    d: f64,
    k2: f64,
}
impl FieldRule for ChargedLagrangian {
    fn apply<S: Real>(&self, p: &[S]) -> Result<S> {
        let (x, phi, z1, z2) = (p[0].clone(), p[2].clone(), p[3].clone(), p[4].clone());
        let kinetic =
            (z1.clone() * z1.clone() + (z2.clone() * z2.clone()).scale(self.k2)).scale(0.5);
        let a1 = x.clone().scale(self.be) * phi.sin();
        let a2 = x.scale(self.be * self.d) * phi.cos();
        Ok(kinetic + a1 * z1 + a2 * z2)
    }
}

#[test]
fn magnetic_legendre_map_shifts_by_the_one_form() {
    let l = ScalarField::new(
        &["x", "y", "phi"],
        &["z1", "z2"],
        ChargedLagrangian {
            be: 1.0,
            d: 0.1,
            k2: 1.0,
        },
    );
    let vs = VelocityState::new(vec![2.0, 0.0, 0.5], vec![0.3, -0.2]);
    let p = legendre_map(&l, &vs).unwrap();
    let a = [2.0 * 0.5f64.sin(), 0.1 * 2.0 * 0.5f64.cos()];
    assert!((p.eta[0] - (0.3 + a[0])).abs() < 1e-15);
    assert!((p.eta[1] - (-0.2 + a[1])).abs() < 1e-15);
}
