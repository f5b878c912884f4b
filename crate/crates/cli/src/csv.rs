//! Trajectory CSV: one header row, one row per recorded sample, LF endings.
//! Numbers use the shortest decimal that parses back to the same `f64`.

use std::io::{self, BufRead, Write};

use nonholo_core::systems::state_names;
use nonholo_core::Trajectory;

pub fn header(system: &str) -> Result<Vec<String>, String> {
    let (base, adm, trans) = state_names(system).map_err(|e| e.to_string())?;
    let mut cols = vec!["t".to_string()];
    cols.extend(base);
    cols.extend(adm);
    cols.extend((1..=trans.len()).map(|i| format!("eta_alpha_{i}")));
    cols.extend(["H", "res_consistency", "res_admissibility"].map(String::from));
    Ok(cols)
}

pub fn number(v: f64) -> String {
    format!("{v:?}")
}

pub fn rows(traj: &Trajectory) -> Vec<Vec<f64>> {
    (0..traj.len())
        .map(|i| {
            let mut row = vec![traj.times[i]];
            row.extend(&traj.states[i].q);
            row.extend(&traj.states[i].eta);
            row.extend(&traj.eta_alpha[i]);
            let o = &traj.observables[i];
            row.extend([o.h, o.consistency_residual, o.admissibility_residual]);
            row
        })
        .collect()
}

pub fn write_table<W: Write>(mut w: W, header: &[String], rows: &[Vec<f64>]) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| number(*v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()
}

pub fn write_trajectory<W: Write>(w: W, system: &str, traj: &Trajectory) -> io::Result<()> {
    let h = header(system).map_err(io::Error::other)?;
    write_table(w, &h, &rows(traj))
}

/// Reads a table written by [`write_table`].
pub fn read_table<R: BufRead>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = r.lines();
    let header: Vec<String> = match lines.next() {
        Some(line) => line
            .map_err(|e| e.to_string())?
            .split(',')
            .map(String::from)
            .collect(),
        None => return Err("empty file".into()),
    };
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let row = line
            .split(',')
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| format!("row {}: `{c}` is not a number", n + 1))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!(
                "row {} has {} cells, header has {}",
                n + 1,
                row.len(),
                header.len()
            ));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
