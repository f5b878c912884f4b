//! Self-check suite: each metric is a plain function so tests can apply
//! their own thresholds; [`suite`] pairs them with the default bounds used by
//! `nonholo check`.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use nonholo_core::systems::{
    admissible_hamiltonian, central_difference, skater_frame, slope_initial_state,
};
use nonholo_core::{
    analytic_state, build, grad, legendre_map, oracle_magnetic, oracle_mechanical, pairing,
    pairing_scale, simulate, PhaseState, Result, StructureTensor, SystemSpec, VelocityState,
    CATALOG,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const MECHANICAL: [&str; 3] = ["skater_free", "skater_slope", "ball_free"];
pub const MAGNETIC: [&str; 3] = ["skater_charged", "ball_magnetic", "ball_harmonic"];

fn uniform(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..r)).collect()
}

fn reduced_field(spec: &SystemSpec, rs: &PhaseState) -> Result<Vec<f64>> {
    let guess = vec![0.0; spec.dirac.transverse()];
    let f = spec
        .dirac
        .reduced_vector_field(&spec.hamiltonian, &spec.consistency, rs, &guess)?;
    Ok([f.qdot, f.etadot].concat())
}

fn max_state_error(spec: &SystemSpec, ic: &PhaseState, t_end: f64, dt: f64) -> Result<f64> {
    let traj = simulate(spec, ic, t_end, dt, 1).map_err(to_error)?;
    let mut worst: f64 = 0.0;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let exact = analytic_state(spec, ic, *t)?;
        for (a, b) in s.point().iter().zip(exact.point()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

fn to_error(e: nonholo_core::SimulationError) -> nonholo_core::Error {
    match e {
        nonholo_core::SimulationError::Config(e) => e,
        nonholo_core::SimulationError::Truncated(t) => t.cause,
    }
}

/// Free skater from `(0,0,0,1,1)` over one period: (max error, seconds).
pub fn skater_free_regression(dt: f64) -> Result<(f64, f64)> {
    let spec = build("skater_free", &[])?;
    let ic = PhaseState::reduced(vec![0.0; 3], vec![1.0, 1.0]);
    let start = Instant::now();
    simulate(&spec, &ic, TAU, dt, 1).map_err(to_error)?;
    let elapsed = start.elapsed().as_secs_f64();
    Ok((max_state_error(&spec, &ic, TAU, dt)?, elapsed))
}

/// Slope skater with parameterization constants `(0,0,1,1,0)` on `[0, t_end]`.
pub fn skater_slope_error(t_end: f64, dt: f64) -> Result<f64> {
    let spec = build("skater_slope", &[])?;
    let ic = slope_initial_state(&spec, 0.0, 0.0, 1.0, 1.0, 0.0);
    max_state_error(&spec, &ic, t_end, dt)
}

/// Error ratio between `dt = 2e-3` and `dt = 1e-3` on the slope regression.
pub fn slope_order_ratio() -> Result<f64> {
    Ok(skater_slope_error(10.0, 2e-3)? / skater_slope_error(10.0, 1e-3)?)
}

/// Largest deviation of the skater structure from `c³₁₂ = c¹₂₃ = 1` (and zero
/// elsewhere) at 20 random angles.
pub fn skater_structure_deviation(rng: &mut ChaCha8Rng) -> Result<f64> {
    let fr = skater_frame();
    let mut expect = StructureTensor::zeros(3);
    expect.set_pair(2, 0, 1, 1.0);
    expect.set_pair(0, 1, 2, 1.0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let q = [
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-PI..PI),
        ];
        worst = worst.max(fr.structure_functions_tangent(&q)?.max_abs_diff(&expect));
    }
    Ok(worst)
}

/// Ball structure constants expanded by hand from the so(3) brackets. 1-based
/// `(i, j, k, c^i_jk)` for `j < k`.
pub fn ball_structure_by_hand(k2: f64, r: f64) -> StructureTensor {
    let s = k2 + r * r;
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
    let mut c = StructureTensor::zeros(5);
    for (i, j, k, v) in entries {
        c.set_pair(i - 1, j - 1, k - 1, v);
    }
    c
}

pub fn ball_structure_deviation() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (k2, r) in [(1.0, 1.0), (0.4, 2.0)] {
        let spec = build("ball_free", &[("k2".into(), k2), ("R".into(), r)])?;
        let c = spec.dirac.algebroid().structure(&[0.3, -0.7])?;
        worst = worst.max(c.max_abs_diff(&ball_structure_by_hand(k2, r)));
    }
    Ok(worst)
}

/// Max over 100 random reduced states of `|Δ| / (1 + |value|)` between the
/// Dirac field and the explicit oracle of the system's kind.
pub fn oracle_deviation(system: &str, rng: &mut ChaCha8Rng) -> Result<f64> {
    let spec = build(system, &[])?;
    let restricted = spec.dirac.algebroid().restrict(spec.k())?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rs = PhaseState::reduced(
            uniform(rng, spec.base_dim(), 2.0),
            uniform(rng, spec.k(), 2.0),
        );
        let f = reduced_field(&spec, &rs)?;
        let (oq, oe) = if spec.is_magnetic() {
            oracle_magnetic(&spec.dirac, &spec.metric, &rs)?
        } else {
            oracle_mechanical(&restricted, &spec.metric, &rs)?
        };
        for (a, b) in f.iter().zip(oq.iter().chain(&oe)) {
            worst = worst.max((a - b).abs() / (1.0 + b.abs()));
        }
    }
    Ok(worst)
}

/// Max `|pairing| / scale` over 1000 random pairs of elements.
pub fn isotropy(system: &str, rng: &mut ChaCha8Rng) -> Result<f64> {
    let spec = build(system, &[])?;
    let d = &spec.dirac;
    let (m, n, k) = (d.base_dim(), d.rank(), d.k());
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let s = PhaseState::full(uniform(rng, m, 2.0), uniform(rng, n, 2.0));
        let e1 = d.make_element(
            &s,
            &uniform(rng, m, 2.0),
            &uniform(rng, k, 2.0),
            &uniform(rng, n - k, 2.0),
        )?;
        let e2 = d.make_element(
            &s,
            &uniform(rng, m, 2.0),
            &uniform(rng, k, 2.0),
            &uniform(rng, n - k, 2.0),
        )?;
        let scale = pairing_scale(&e1, &e2)?;
        if scale > 0.0 {
            worst = worst.max(pairing(&e1, &e2)?.abs() / scale);
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug)]
pub struct EnergyRun {
    pub drift: f64,
    pub consistency: f64,
    pub admissibility: f64,
}

/// Ten time units at `dt = 1e-3` from a random state with `‖η‖ ≤ 2`.
pub fn energy_run(system: &str, rng: &mut ChaCha8Rng) -> Result<EnergyRun> {
    let spec = build(system, &[])?;
    let q = uniform(rng, spec.base_dim(), 1.0);
    let dir = uniform(rng, spec.k(), 1.0);
    let norm = dir
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let radius = rng.gen_range(0.2..2.0);
    let eta = dir.iter().map(|v| v * radius / norm).collect();
    let traj = simulate(&spec, &PhaseState::reduced(q, eta), 10.0, 1e-3, 10).map_err(to_error)?;
    let h0 = traj.observables[0].h;
    let mut run = EnergyRun {
        drift: 0.0,
        consistency: 0.0,
        admissibility: 0.0,
    };
    for o in &traj.observables {
        run.drift = run.drift.max((o.h - h0).abs() / h0.abs().max(1.0));
        run.consistency = run.consistency.max(o.consistency_residual);
        run.admissibility = run.admissibility.max(o.admissibility_residual);
    }
    Ok(run)
}

fn circumcenter(a: &[f64], b: &[f64], c: &[f64]) -> [f64; 2] {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    let (a2, b2, c2) = (
        a[0] * a[0] + a[1] * a[1],
        b[0] * b[0] + b[1] * b[1],
        c[0] * c[0] + c[1] * c[1],
    );
    [
        (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d,
        (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d,
    ]
}

/// Magnetic ball from `(0,0,1,0,0)` over one period: (relative radius spread,
/// relative angular frequency error).
pub fn magnetic_circle() -> Result<(f64, f64)> {
    let spec = build("ball_magnetic", &[])?;
    let p = |n: &str| spec.param(n).unwrap_or(1.0);
    let (r, k2) = (p("R"), p("k2"));
    let omega = p("e_c") * p("B") * r * r / (p("m") * (k2 + r * r));
    let period = TAU / omega;
    let ic = PhaseState::reduced(vec![0.0, 0.0], vec![1.0, 0.0, 0.0]);
    let traj = simulate(&spec, &ic, period, 1e-3, 10).map_err(to_error)?;
    let q: Vec<&[f64]> = traj.states.iter().map(|s| s.q.as_slice()).collect();
    let c = circumcenter(q[0], q[5], q[10]);
    let radius: Vec<f64> = q.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).collect();
    let (lo, hi) = radius
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
    let mut angle = 0.0;
    for w in q.windows(2) {
        let a0 = (w[0][1] - c[1]).atan2(w[0][0] - c[0]);
        let a1 = (w[1][1] - c[1]).atan2(w[1][0] - c[0]);
        angle += (a1 - a0 + PI).rem_euclid(TAU) - PI;
    }
    let measured = angle.abs() / (traj.times.last().unwrap() - traj.times[0]);
    Ok(((hi - lo) / hi, (measured - omega).abs() / omega))
}

/// Free ball: largest normalized cross product of successive displacements.
pub fn straight_line_deviation() -> Result<f64> {
    let spec = build("ball_free", &[])?;
    let ic = PhaseState::reduced(vec![0.1, -0.3], vec![0.8, 0.5, 1.7]);
    let traj = simulate(&spec, &ic, 10.0, 1e-3, 50).map_err(to_error)?;
    let mut worst: f64 = 0.0;
    for w in traj.states.windows(3) {
        let u = [w[1].q[0] - w[0].q[0], w[1].q[1] - w[0].q[1]];
        let v = [w[2].q[0] - w[1].q[0], w[2].q[1] - w[1].q[1]];
        let cross = (u[0] * v[1] - u[1] * v[0]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
        worst = worst.max(cross.abs());
    }
    Ok(worst)
}

/// Charged skater with `d = 0` against the free skater with the same initial
/// velocity, over `[0, 10]`.
pub fn charged_center_difference() -> Result<f64> {
    let charged = build("skater_charged", &[("d".into(), 0.0)])?;
    let free = build("skater_free", &[])?;
    let (x0, phi0) = (0.5f64, 0.3f64);
    let (b, e) = (
        charged.param("B").unwrap_or(1.0),
        charged.param("e_c").unwrap_or(1.0),
    );
    let ic = PhaseState::reduced(vec![x0, -0.2, phi0], vec![1.0, 0.8]);
    // the free momentum equals the charged kinetic momentum η₁ − A₁
    let ic_free = PhaseState::reduced(ic.q.clone(), vec![1.0 - b * e * x0 * phi0.sin(), 0.8]);
    let a = simulate(&charged, &ic, 10.0, 1e-3, 10).map_err(to_error)?;
    let f = simulate(&free, &ic_free, 10.0, 1e-3, 10).map_err(to_error)?;
    let mut worst: f64 = 0.0;
    for (s, t) in a.states.iter().zip(&f.states) {
        for (u, v) in s.q.iter().zip(&t.q) {
            worst = worst.max((u - v).abs());
        }
    }
    Ok(worst)
}

/// Max relative error of AD gradients against central differences at 100
/// random points.
pub fn gradient_error(system: &str, rng: &mut ChaCha8Rng) -> Result<f64> {
    let spec = build(system, &[])?;
    let h = &spec.hamiltonian;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = uniform(rng, h.arity(), 2.0);
        let g = grad(h, &p)?;
        let fd = central_difference(h, &p, 1e-6)?;
        for (a, b) in g.iter().zip(&fd) {
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    Ok(worst)
}

/// Max relative disagreement between the Lagrangian-side and Hamiltonian-side
/// dynamics at 100 random velocity states.
pub fn legendre_deviation(system: &str, rng: &mut ChaCha8Rng) -> Result<f64> {
    let spec = build(system, &[])?;
    let l = spec
        .lagrangian
        .clone()
        .ok_or_else(|| nonholo_core::Error::Unsupported(format!("`{system}` has no Lagrangian")))?;
    let alg = spec.dirac.algebroid().restrict(spec.k())?;
    let h = admissible_hamiltonian(&spec)?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let vs = VelocityState::new(
            uniform(rng, spec.base_dim(), 2.0),
            uniform(rng, spec.k(), 2.0),
        );
        let (_, qd, ed) = alg.lagrangian_dynamics(&l, &vs)?;
        let (hq, he) = alg.hamiltonian_vector_field(&h, &legendre_map(&l, &vs)?)?;
        for (a, b) in qd.iter().chain(&ed).zip(hq.iter().chain(&he)) {
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    Within(f64, f64),
}

impl Bound {
    /// `scale` multiplies tolerances; for ranges it scales the half-width.
    pub fn holds(self, value: f64, scale: f64) -> bool {
        match self {
            Bound::AtMost(t) => value <= t * scale,
            Bound::Within(lo, hi) => {
                let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
                (value - mid).abs() <= half * scale
            }
        }
    }
}

type Metric = Box<dyn Fn(&mut ChaCha8Rng) -> Result<Vec<f64>> + Send + Sync>;

/// One computation reported as one or more named outcomes.
pub struct Check {
    pub parts: Vec<(String, Bound)>,
    pub systems: Vec<&'static str>,
    metric: Metric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub name: String,
    pub pass: bool,
    pub value: Option<f64>,
    pub error: Option<String>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        match (&self.value, &self.error) {
            (Some(v), _) => format!("CHECK {} {verdict} {v:e}", self.name),
            (None, Some(e)) => format!("CHECK {} {verdict} error: {e}", self.name),
            (None, None) => format!("CHECK {} {verdict}", self.name),
        }
    }
}

fn check(
    name: impl Into<String>,
    systems: Vec<&'static str>,
    bound: Bound,
    metric: impl Fn(&mut ChaCha8Rng) -> Result<f64> + Send + Sync + 'static,
) -> Check {
    Check {
        parts: vec![(name.into(), bound)],
        systems,
        metric: Box::new(move |r| Ok(vec![metric(r)?])),
    }
}

/// The full suite in a fixed order; the order fixes each check's RNG stream.
pub fn suite() -> Vec<Check> {
    let mut v = vec![
        check(
            "analytic_skater_free",
            vec!["skater_free"],
            Bound::AtMost(1e-8),
            |_| Ok(skater_free_regression(1e-3)?.0),
        ),
        Check {
            parts: vec![
                ("analytic_skater_slope".into(), Bound::AtMost(1e-7)),
                ("order_skater_slope".into(), Bound::Within(14.0, 18.0)),
            ],
            systems: vec!["skater_slope"],
            metric: Box::new(|_| {
                let fine = skater_slope_error(10.0, 1e-3)?;
                let coarse = skater_slope_error(10.0, 2e-3)?;
                Ok(vec![fine, coarse / fine])
            }),
        },
        check(
            "structure_skater",
            vec!["skater_free", "skater_slope", "skater_charged"],
            Bound::AtMost(1e-14),
            skater_structure_deviation,
        ),
        check(
            "structure_ball",
            vec!["ball_free", "ball_magnetic", "ball_harmonic"],
            Bound::AtMost(1e-13),
            |_| ball_structure_deviation(),
        ),
        check(
            "oracle_mechanical_skater",
            vec!["skater_free", "skater_slope"],
            Bound::AtMost(1e-12),
            |r| Ok(oracle_deviation("skater_free", r)?.max(oracle_deviation("skater_slope", r)?)),
        ),
        check(
            "oracle_mechanical_ball",
            vec!["ball_free"],
            Bound::AtMost(1e-12),
            |r| oracle_deviation("ball_free", r),
        ),
        check(
            "oracle_magnetic_skater",
            vec!["skater_charged"],
            Bound::AtMost(1e-12),
            |r| oracle_deviation("skater_charged", r),
        ),
        check(
            "oracle_magnetic_ball",
            vec!["ball_magnetic", "ball_harmonic"],
            Bound::AtMost(1e-12),
            |r| Ok(oracle_deviation("ball_magnetic", r)?.max(oracle_deviation("ball_harmonic", r)?)),
        ),
        check(
            "circle_ball_magnetic",
            vec!["ball_magnetic"],
            Bound::AtMost(1e-6),
            |_| {
                let (spread, freq) = magnetic_circle()?;
                Ok(spread.max(freq))
            },
        ),
        check(
            "straight_ball_free",
            vec!["ball_free"],
            Bound::AtMost(1e-8),
            |_| straight_line_deviation(),
        ),
        check(
            "centered_charge_skater",
            vec!["skater_charged", "skater_free"],
            Bound::AtMost(1e-9),
            |_| charged_center_difference(),
        ),
    ];
    for name in CATALOG {
        v.push(check(
            format!("isotropy_{name}"),
            vec![name],
            Bound::AtMost(1e-12),
            move |r| isotropy(name, r),
        ));
        v.push(Check {
            parts: vec![
                (format!("energy_{name}"), Bound::AtMost(1e-8)),
                (format!("consistency_{name}"), Bound::AtMost(1e-10)),
                (format!("admissibility_{name}"), Bound::AtMost(1e-11)),
            ],
            systems: vec![name],
            metric: Box::new(move |r| {
                let run = energy_run(name, r)?;
                Ok(vec![run.drift, run.consistency, run.admissibility])
            }),
        });
        v.push(check(
            format!("gradient_{name}"),
            vec![name],
            Bound::AtMost(1e-6),
            move |r| gradient_error(name, r),
        ));
    }
    for name in MECHANICAL {
        v.push(check(
            format!("legendre_{name}"),
            vec![name],
            Bound::AtMost(1e-12),
            move |r| legendre_deviation(name, r),
        ));
    }
    v
}

/// Runs every check touching `scope` (`"all"` or a catalog name) in
/// parallel. Each check draws from its own stream of the seeded generator,
/// so results do not depend on scheduling.
pub fn run(scope: &str, seed: u64, scale: f64) -> Vec<Outcome> {
    let all = suite();
    let picked: Vec<(usize, &Check)> = all
        .iter()
        .enumerate()
        .filter(|(_, c)| scope == "all" || c.systems.contains(&scope))
        .collect();
    let nested: Vec<Vec<Outcome>> = picked
        .par_iter()
        .map(|(i, c)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(*i as u64);
            match (c.metric)(&mut rng) {
                Ok(values) => c
                    .parts
                    .iter()
                    .zip(values)
                    .map(|((name, bound), v)| Outcome {
                        name: name.clone(),
                        pass: bound.holds(v, scale),
                        value: Some(v),
                        error: None,
                    })
                    .collect(),
                Err(e) => c
                    .parts
                    .iter()
                    .map(|(name, _)| Outcome {
                        name: name.clone(),
                        pass: false,
                        value: None,
                        error: Some(e.to_string()),
                    })
                    .collect(),
            }
        })
        .collect();
    nested.into_iter().flatten().collect()
}
