use std::fs::File;
use std::io::{self, BufWriter, Write};

use nonholo_core::systems::{default_params, describe, state_names};
use nonholo_core::{
    build, hamiltonian_with_potential, parse_str, simulate, SimulationError, SystemSpec, CATALOG,
};

use crate::checks;
use crate::config::RunConfig;
use crate::csv;
use crate::format::g17;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_TRUNCATED: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// A failed command: exit code plus a message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::usage(e.to_string())
}

pub fn list<W: Write>(mut out: W) -> io::Result<()> {
    for name in CATALOG {
        let (base, adm, trans) = state_names(name).expect("catalog name");
        writeln!(out, "{name}: {}", describe(name))?;
        let params: Vec<String> = default_params(name)
            .expect("catalog name")
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        writeln!(out, "  params: {}", params.join(" "))?;
        writeln!(out, "  state: {}", [base, adm].concat().join(","))?;
        writeln!(out, "  transverse: {}", trans.join(","))?;
    }
    Ok(())
}

/// The default initial state when none is given.
pub fn default_ic(spec: &SystemSpec) -> Vec<f64> {
    if spec.base_dim() == 3 {
        vec![0.0, 0.0, 0.0, 1.0, 1.0]
    } else {
        vec![0.0, 0.0, 1.0, 0.0, 0.0]
    }
}

pub fn build_spec(
    system: &str,
    params: &[(String, f64)],
    potential: Option<&str>,
) -> Result<SystemSpec, Failure> {
    let spec = build(system, params).map_err(usage)?;
    match potential {
        Some(text) => {
            let expr = parse_str(text).map_err(|e| Failure::usage(format!("potential: {e}")))?;
            hamiltonian_with_potential(&spec, &expr)
                .map_err(|e| Failure::usage(format!("potential: {e}")))
        }
        None => Ok(spec),
    }
}

pub fn simulate_cmd<W: Write>(cfg: &RunConfig, stdout: W) -> Result<(), Failure> {
    let spec = build_spec(&cfg.system, &cfg.params, cfg.potential.as_deref())?;
    let values = cfg.ic.clone().unwrap_or_else(|| default_ic(&spec));
    let ic = spec
        .reduced_state(&values)
        .map_err(|e| Failure::usage(format!("initial state: {e}")))?;
    let (traj, failure) = match simulate(&spec, &ic, cfg.t_end, cfg.dt, cfg.stride) {
        Ok(t) => (t, None),
        Err(SimulationError::Config(e)) => return Err(usage(e)),
        Err(SimulationError::Truncated(t)) => {
            let message = format!("trajectory truncated at t = {}: {}", t.failed_at, t.cause);
            (t.partial, Some(message))
        }
    };
    let written = match &cfg.out {
        Some(path) => {
            let f = File::create(path)
                .map_err(|e| Failure::usage(format!("cannot create {}: {e}", path.display())))?;
            csv::write_trajectory(BufWriter::new(f), &cfg.system, &traj)
        }
        None => csv::write_trajectory(stdout, &cfg.system, &traj),
    };
    written.map_err(|e| Failure::usage(format!("writing CSV: {e}")))?;
    match failure {
        Some(message) => Err(Failure {
            code: EXIT_TRUNCATED,
            message,
        }),
        None => Ok(()),
    }
}

pub fn check_cmd<W: Write>(mut out: W, scope: &str, seed: u64, scale: f64) -> Result<(), Failure> {
    if scope != "all" && !CATALOG.contains(&scope) {
        return Err(Failure::usage(format!("unknown system `{scope}`")));
    }
    let outcomes = checks::run(scope, seed, scale);
    for o in &outcomes {
        writeln!(out, "{}", o.line()).map_err(usage)?;
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_CHECK_FAILED,
            message: format!("{failed} of {} checks failed", outcomes.len()),
        })
    }
}

fn vector(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| g17(*x)).collect();
    format!("[{}]", cells.join(", "))
}

pub fn inspect_cmd<W: Write>(
    mut out: W,
    system: &str,
    params: &[(String, f64)],
    state: Option<&[f64]>,
) -> Result<(), Failure> {
    let spec = build_spec(system, params, None)?;
    let values = state
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| default_ic(&spec));
    let rs = spec.reduced_state(&values).map_err(usage)?;
    let alg = spec.dirac.algebroid();
    let rho = alg.anchor(&rs.q).map_err(usage)?;
    let c = alg.structure(&rs.q).map_err(usage)?;
    let guess = vec![0.0; spec.dirac.transverse()];
    let field = spec
        .dirac
        .reduced_vector_field(&spec.hamiltonian, &spec.consistency, &rs, &guess)
        .map_err(usage)?;
    let (base, adm, trans) = state_names(system).map_err(usage)?;
    let mut text = String::new();
    text += &format!("system {system}\n");
    text += &format!("q {} = {}\n", base.join(","), vector(&rs.q));
    text += &format!("eta {} = {}\n", adm.join(","), vector(&rs.eta));
    text += "anchor rows\n";
    for i in 0..rho.rows() {
        let row: Vec<f64> = (0..rho.cols()).map(|j| rho[(i, j)]).collect();
        text += &format!("  {}\n", vector(&row));
    }
    text += "structure functions (c[i][j][k], j<k, nonzero)\n";
    for (i, j, k, v) in c.nonzeros(0.0) {
        text += &format!("c[{}][{}][{}]={}\n", i + 1, j + 1, k + 1, g17(v));
    }
    text += &format!(
        "consistency {} = {}\n",
        trans.join(","),
        vector(&field.eta_alpha)
    );
    text += &format!("qdot = {}\n", vector(&field.qdot));
    text += &format!("etadot = {}\n", vector(&field.etadot));
    out.write_all(text.as_bytes()).map_err(usage)
}
