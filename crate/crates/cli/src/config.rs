//! Run configuration: command-line flags layered over an optional TOML file.
//!
//! ```toml
//! [run]
//! system = "skater_slope"
//! ic = [0.25, -1.0, 0.0, 1.0, 1.0]
//! t_end = 10.0
//! dt = 1e-3
//! stride = 10
//! potential = "0.1*x^2"
//! out = "slope.csv"
//!
//! [params]
//! lambda = 0.5
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_STRIDE: usize = 10;
pub const DEFAULT_T_END: f64 = 10.0;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub system: Option<String>,
    pub ic: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
    pub potential: Option<String>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Everything a `simulate` run needs, after merging.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub system: String,
    pub params: Vec<(String, f64)>,
    /// Reduced state: base coordinates then admissible momenta. `None` picks
    /// the system's default.
    pub ic: Option<Vec<f64>>,
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
    pub potential: Option<String>,
    pub out: Option<PathBuf>,
}

/// Flag values as given on the command line; `None` defers to the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub system: Option<String>,
    pub params: Vec<(String, f64)>,
    pub ic: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
    pub potential: Option<String>,
    pub out: Option<PathBuf>,
}

pub fn merge(file: FileConfig, flags: Overrides) -> Result<RunConfig, String> {
    let system = flags
        .system
        .or(file.run.system)
        .ok_or("no system given (use --system or [run] system in the config file)")?;
    let mut params: Vec<(String, f64)> = file.params.into_iter().collect();
    for (k, v) in flags.params {
        match params.iter_mut().find(|(n, _)| *n == k) {
            Some(slot) => slot.1 = v,
            None => params.push((k, v)),
        }
    }
    Ok(RunConfig {
        system,
        params,
        ic: flags.ic.or(file.run.ic),
        t_end: flags.t_end.or(file.run.t_end).unwrap_or(DEFAULT_T_END),
        dt: flags.dt.or(file.run.dt).unwrap_or(DEFAULT_DT),
        stride: flags.stride.or(file.run.stride).unwrap_or(DEFAULT_STRIDE),
        potential: flags.potential.or(file.run.potential),
        out: flags.out.or(file.run.out),
    })
}

/// `name=value`.
pub fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value: f64 = value.trim().parse().map_err(|_| {
        format!(
            "parameter `{}` has a non-numeric value `{value}`",
            name.trim()
        )
    })?;
    Ok((name.trim().to_string(), value))
}

/// A comma-separated list of numbers given as one flag value.
#[derive(Clone, Debug, PartialEq)]
pub struct NumberList(pub Vec<f64>);

/// `v1,v2,...`.
pub fn parse_list(s: &str) -> Result<NumberList, String> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{v}` is not a number"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(NumberList)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_the_file() {
        let file = FileConfig::parse(
            "[run]\nsystem = \"skater_free\"\ndt = 0.01\nstride = 3\n[params]\nm = 2.0\nk2 = 3.0\n",
        )
        .unwrap();
        let flags = Overrides {
            dt: Some(0.02),
            params: vec![("m".into(), 5.0)],
            ..Default::default()
        };
        let cfg = merge(file, flags).unwrap();
        assert_eq!(cfg.system, "skater_free");
        assert_eq!(cfg.dt, 0.02);
        assert_eq!(cfg.stride, 3);
        assert_eq!(cfg.t_end, DEFAULT_T_END);
        assert_eq!(cfg.params, vec![("k2".into(), 3.0), ("m".into(), 5.0)]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(FileConfig::parse("[run]\nsytem = \"x\"\n").is_err());
        assert!(FileConfig::parse("[extra]\n").is_err());
    }

    #[test]
    fn missing_system() {
        assert!(merge(FileConfig::default(), Overrides::default()).is_err());
    }

    #[test]
    fn flag_syntax() {
        assert_eq!(parse_param("lambda=0.5").unwrap(), ("lambda".into(), 0.5));
        assert!(parse_param("lambda").is_err());
        assert!(parse_param("m=abc").is_err());
        assert_eq!(parse_list("1, 2,3e-1").unwrap().0, vec![1.0, 2.0, 0.3]);
        assert!(parse_list("1,,2").is_err());
    }
}
