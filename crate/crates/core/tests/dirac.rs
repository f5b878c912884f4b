use nonholo_core::exprparse::ExprField;
use nonholo_core::systems::{charged_skater_display, velocity_components};
use nonholo_core::{
    build, grad, oracle_magnetic, oracle_mechanical, pairing, pairing_scale, parse_str, simulate,
    ConsistencySolution, Error, PhaseState, ScalarField, SystemSpec, CATALOG,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

fn random_reduced(rng: &mut ChaCha8Rng, spec: &SystemSpec) -> PhaseState {
    PhaseState::reduced(draw(rng, spec.base_dim()), draw(rng, spec.k()))
}

fn field(spec: &SystemSpec, rs: &PhaseState) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let guess = vec![0.0; spec.dirac.transverse()];
    let f = spec
        .dirac
        .reduced_vector_field(&spec.hamiltonian, &spec.consistency, rs, &guess)
        .unwrap();
    (f.qdot, f.etadot, f.eta_alpha)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs()))
}

#[test]
fn element_examples() {
    let spec = build("skater_charged", &[]).unwrap();
    let d = &spec.dirac;
    let s = PhaseState::full(vec![0.0; 3], vec![0.4, -0.3, 0.7]);
    let zero = d.make_element(&s, &[0.0; 3], &[0.0; 2], &[0.0]).unwrap();
    assert!(zero
        .vec_base
        .iter()
        .chain(&zero.vec_fiber)
        .chain(&zero.cov_fiber)
        .all(|v| *v == 0.0));

    let e = d.make_element(&s, &[0.0; 3], &[1.0, 0.0], &[0.0]).unwrap();
    assert_eq!(e.vec_base, vec![1.0, 0.0, 0.0]);
    // η̇₁ = η₃ z² − ..., η̇₂ = −η₃ z¹
    assert_eq!(e.vec_fiber, vec![0.0, -0.7, 0.0]);
    let e = d.make_element(&s, &[0.0; 3], &[0.0, 1.0], &[0.0]).unwrap();
    assert_eq!(e.vec_base, d.algebroid().anchor(&s.q).unwrap().column(1));
    assert_eq!(e.vec_fiber[0], 0.7);

    // the covector a enters as −ρ^l_b a_l
    let e = d
        .make_element(&s, &[2.0, 3.0, 5.0], &[0.0, 0.0], &[0.0])
        .unwrap();
    assert_eq!(&e.vec_fiber[..2], &[-2.0, -5.0]);
}

#[test]
fn pairing_examples() {
    let spec = build("skater_free", &[]).unwrap();
    let d = &spec.dirac;
    let s = PhaseState::full(vec![0.0; 3], vec![0.0; 3]);
    let mut cov = d
        .make_element(&s, &[1.0, 0.0, 0.0], &[0.0, 0.0], &[0.0])
        .unwrap();
    cov.vec_fiber = vec![0.0; 3];
    let mut vel = d.make_element(&s, &[0.0; 3], &[1.0, 0.0], &[0.0]).unwrap();
    vel.cov_fiber = vec![0.0; 3];
    assert_eq!(pairing(&cov, &vel).unwrap(), 1.0);

    let other = d
        .make_element(
            &PhaseState::full(vec![1.0, 0.0, 0.0], vec![0.0; 3]),
            &[0.0; 3],
            &[0.0; 2],
            &[0.0],
        )
        .unwrap();
    assert!(matches!(pairing(&cov, &other), Err(Error::Validation(_))));
    assert!(d.make_element(&s, &[0.0; 2], &[0.0; 2], &[0.0]).is_err());
}

#[test]
fn elements_are_isotropic() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for name in CATALOG {
        let spec = build(name, &[]).unwrap();
        let d = &spec.dirac;
        let (m, n, k) = (d.base_dim(), d.rank(), d.k());
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let s = PhaseState::full(draw(&mut rng, m), draw(&mut rng, n));
            let e1 = d
                .make_element(
                    &s,
                    &draw(&mut rng, m),
                    &draw(&mut rng, k),
                    &draw(&mut rng, n - k),
                )
                .unwrap();
            let e2 = d
                .make_element(
                    &s,
                    &draw(&mut rng, m),
                    &draw(&mut rng, k),
                    &draw(&mut rng, n - k),
                )
                .unwrap();
            for (a, b) in [(&e1, &e2), (&e1, &e1)] {
                let p = pairing(a, b).unwrap();
                let scale = pairing_scale(a, b).unwrap().max(f64::MIN_POSITIVE);
                worst = worst.max(p.abs() / scale);
            }
        }
        assert!(worst <= 1e-12, "{name}: {worst:e}");
    }
}

#[test]
fn consistency_examples() {
    let spec = build("skater_free", &[]).unwrap();
    let s = PhaseState::full(vec![0.3, 0.2, 1.0], vec![0.5, -1.0, 0.0]);
    assert_eq!(
        spec.dirac
            .consistency_residual(&spec.hamiltonian, &s)
            .unwrap(),
        vec![0.0]
    );

    let spec = build("skater_charged", &[]).unwrap();
    let (x, phi) = (1.3f64, 0.6f64);
    let s = PhaseState::full(vec![x, 0.0, phi], vec![0.2, 0.1, x * phi.cos()]);
    assert!(
        spec.dirac
            .consistency_residual(&spec.hamiltonian, &s)
            .unwrap()[0]
            .abs()
            < 1e-15
    );
    let eta3 = spec
        .dirac
        .solve_consistency(
            &spec.hamiltonian,
            &spec.consistency,
            &[2.0, 0.0, 0.0],
            &[0.0, 0.0],
            &[0.0],
        )
        .unwrap();
    assert_eq!(eta3, vec![2.0]);

    let spec = build("ball_magnetic", &[]).unwrap();
    let s = PhaseState::full(vec![0.7, -0.2], vec![0.1, 0.2, 0.3, 0.0, 0.7]);
    let r = spec
        .dirac
        .consistency_residual(&spec.hamiltonian, &s)
        .unwrap();
    assert!(r.iter().all(|v| v.abs() < 1e-15), "{r:?}");
    let sol = spec
        .dirac
        .solve_consistency(
            &spec.hamiltonian,
            &spec.consistency,
            &[1.0, 0.0],
            &[0.0; 3],
            &[0.0; 2],
        )
        .unwrap();
    assert_eq!(sol, vec![0.0, 1.0]);
}

#[test]
fn newton_agrees_with_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for name in CATALOG {
        let spec = build(name, &[]).unwrap();
        let t = spec.dirac.transverse();
        for _ in 0..50 {
            let rs = random_reduced(&mut rng, &spec);
            let closed = spec
                .dirac
                .solve_consistency(
                    &spec.hamiltonian,
                    &spec.consistency,
                    &rs.q,
                    &rs.eta,
                    &vec![0.0; t],
                )
                .unwrap();
            let newton = spec
                .dirac
                .solve_consistency(
                    &spec.hamiltonian,
                    &ConsistencySolution::Newton,
                    &rs.q,
                    &rs.eta,
                    &draw(&mut rng, t),
                )
                .unwrap();
            assert!(
                close(&closed, &newton, 1e-12),
                "{name}: {closed:?} vs {newton:?}"
            );
        }
    }
}

#[test]
fn flat_transverse_direction_is_degenerate() {
    let spec = build("skater_free", &[]).unwrap();
    let names: Vec<String> = ["x", "y", "phi", "eta1", "eta2", "eta3"]
        .map(String::from)
        .to_vec();
    let rule = ExprField::new(parse_str("0.5*(eta1^2 + eta2^2)").unwrap(), &names).unwrap();
    let h = ScalarField::new(&["x", "y", "phi"], &["eta1", "eta2", "eta3"], rule);
    let r = spec.dirac.solve_consistency(
        &h,
        &ConsistencySolution::Newton,
        &[0.0; 3],
        &[1.0, 1.0],
        &[0.0],
    );
    assert!(matches!(r, Err(Error::DegenerateHamiltonian)), "{r:?}");
}

#[test]
fn reduced_field_examples() {
    let rs = PhaseState::reduced(vec![0.0; 3], vec![1.0, 1.0]);
    let (qd, ed, ea) = field(&build("skater_free", &[]).unwrap(), &rs);
    assert_eq!([qd, ed].concat(), vec![1.0, 0.0, 1.0, 0.0, 0.0]);
    assert_eq!(ea, vec![0.0]);
    let (_, ed, _) = field(&build("skater_slope", &[]).unwrap(), &rs);
    assert_eq!(ed, vec![-1.0, 0.0]);

    let rs = PhaseState::reduced(vec![0.0, 0.0], vec![1.0, 0.0, 0.0]);
    let (qd, ed, _) = field(&build("ball_magnetic", &[]).unwrap(), &rs);
    assert_eq!(qd, vec![0.5, 0.0]);
    assert_eq!(ed, vec![0.0, 0.0, 0.0]);

    let zero = PhaseState::reduced(vec![0.0; 3], vec![0.0; 2]);
    let spec = build("skater_free", &[]).unwrap();
    let alg = spec.dirac.algebroid().restrict(2).unwrap();
    let (qd, ed) = oracle_mechanical(&alg, &spec.metric, &zero).unwrap();
    assert!(qd.iter().chain(&ed).all(|v| *v == 0.0));
}

#[test]
fn reduced_field_matches_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for name in CATALOG {
        let spec = build(name, &[]).unwrap();
        let restricted = spec.dirac.algebroid().restrict(spec.k()).unwrap();
        for _ in 0..100 {
            let rs = random_reduced(&mut rng, &spec);
            let (qd, ed, _) = field(&spec, &rs);
            let (oq, oe) = if spec.is_magnetic() {
                oracle_magnetic(&spec.dirac, &spec.metric, &rs).unwrap()
            } else {
                oracle_mechanical(&restricted, &spec.metric, &rs).unwrap()
            };
            assert!(
                close(&qd, &oq, 1e-12) && close(&ed, &oe, 1e-12),
                "{name}: {qd:?} {ed:?} vs {oq:?} {oe:?}"
            );
        }
    }
}

#[test]
fn magnetic_oracle_without_one_form_is_mechanical() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for name in ["skater_charged", "ball_magnetic"] {
        let spec = build(name, &[]).unwrap();
        let mut metric = spec.metric.clone();
        metric.one_form = None;
        let restricted = spec.dirac.algebroid().restrict(spec.k()).unwrap();
        for _ in 0..50 {
            let rs = random_reduced(&mut rng, &spec);
            let (a, b) = oracle_magnetic(&spec.dirac, &metric, &rs).unwrap();
            let (c, d) = oracle_mechanical(&restricted, &metric, &rs).unwrap();
            assert!(close(&a, &c, 1e-14) && close(&b, &d, 1e-14));
        }
    }
}

#[test]
fn reduced_energy_is_conserved_pointwise() {
    // ∂H/∂η_α = 0 on the effective phase space, so dH_C = dH restricted to (q, η_a)
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    for name in CATALOG {
        let spec = build(name, &[]).unwrap();
        let (m, k) = (spec.base_dim(), spec.k());
        for _ in 0..100 {
            let rs = random_reduced(&mut rng, &spec);
            let (qd, ed, ea) = field(&spec, &rs);
            let mut p = rs.point();
            p.extend(&ea);
            let g = grad(&spec.hamiltonian, &p).unwrap();
            let terms: Vec<f64> = g[..m + k]
                .iter()
                .zip(qd.iter().chain(&ed))
                .map(|(a, b)| a * b)
                .collect();
            let scale = terms.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
            assert!(terms.iter().sum::<f64>().abs() <= 1e-11 * scale, "{name}");
        }
    }
}

#[test]
fn base_velocity_is_admissible() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for name in ["skater_free", "skater_slope", "skater_charged"] {
        let spec = build(name, &[]).unwrap();
        for _ in 0..100 {
            let rs = random_reduced(&mut rng, &spec);
            let (qd, _, _) = field(&spec, &rs);
            let z = velocity_components(&spec, &rs.q, &qd).unwrap().unwrap();
            let norm = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(
                z[2].abs() <= 1e-12 * norm.max(f64::MIN_POSITIVE),
                "{name}: {z:?}"
            );
        }
    }
}

#[test]
fn transverse_momenta_follow_the_one_form_along_the_flow() {
    for name in ["skater_charged", "ball_magnetic", "ball_harmonic"] {
        let spec = build(name, &[]).unwrap();
        let ConsistencySolution::Affine(a) = &spec.consistency else {
            panic!("{name} should have an affine consistency solution");
        };
        let ic = spec.reduced_state(&vec![0.4; spec.reduced_len()]).unwrap();
        let residual = |dt: f64| {
            let traj = simulate(&spec, &ic, 1.0, dt, 1).unwrap();
            let mut worst: f64 = 0.0;
            for i in 1..traj.len() - 1 {
                let (qd, _, _) = field(&spec, &traj.states[i]);
                let (_, partials) = a.eval_with_partials(&traj.states[i].q).unwrap();
                for beta in 0..spec.dirac.transverse() {
                    let fd =
                        (traj.eta_alpha[i + 1][beta] - traj.eta_alpha[i - 1][beta]) / (2.0 * dt);
                    let chain: f64 = partials
                        .iter()
                        .zip(&qd)
                        .map(|(p, v)| p[(beta, 0)] * v)
                        .sum();
                    worst = worst.max((fd - chain).abs());
                }
            }
            worst
        };
        let (r1, r2) = (residual(2e-3), residual(1e-3));
        assert!(r2 <= 1e-5, "{name}: {r2:e}");
        // second order in the sample spacing, unless already at round-off
        assert!(
            r2 < 1e-10 || (3.0..=5.0).contains(&(r1 / r2)),
            "{name}: {r1:e} / {r2:e}"
        );
    }
}

#[test]
fn charged_skater_display_fixture() {
    let mut rng = ChaCha8Rng::seed_from_u64(67);
    for (q, d) in [(1.0, 0.1), (2.0, 0.3)] {
        let spec = build("skater_charged", &[("e_c".into(), q), ("d".into(), d)]).unwrap();
        for _ in 0..50 {
            let rs = random_reduced(&mut rng, &spec);
            let (qd, ed, _) = field(&spec, &rs);
            let (cq, ce) = charged_skater_display(&spec, &rs, true).unwrap();
            assert!(
                close(&qd, &cq, 1e-12) && close(&ed, &ce, 1e-12),
                "corrected form"
            );
            let (lq, le) = charged_skater_display(&spec, &rs, false).unwrap();
            assert!(close(&qd[..2], &lq[..2], 1e-12));
            assert!(close(&ed[..1], &le[..1], 1e-12), "printed η̇₁ agrees");
            assert_eq!(le[1], -ce[1]);
            if q == 1.0 {
                assert!(close(&qd[2..], &lq[2..], 1e-12));
            }
        }
    }
    // with the charge doubled the printed φ̇ no longer matches
    let spec = build("skater_charged", &[("e_c".into(), 2.0)]).unwrap();
    let rs = PhaseState::reduced(vec![1.0, 0.0, 0.2], vec![0.3, 0.4]);
    let (qd, _, _) = field(&spec, &rs);
    let (lq, _) = charged_skater_display(&spec, &rs, false).unwrap();
    assert!((qd[2] - lq[2]).abs() > 1e-3);
}
