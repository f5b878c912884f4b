//! `nonholo` command-line front end: catalog listing, simulation to CSV,
//! the self-check suite and pointwise inspection.

pub mod checks;
pub mod commands;
pub mod config;
pub mod csv;
pub mod format;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{Failure, EXIT_OK, EXIT_USAGE};
use config::{FileConfig, NumberList, Overrides};

#[derive(Debug, Parser)]
#[command(
    name = "nonholo",
    version,
    about = "Nonholonomic mechanics through Dirac algebroids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Catalog systems with their parameters and state variables.
    List,
    /// Integrate a system and write its trajectory as CSV.
    Simulate(SimulateArgs),
    /// Run the self-check suite.
    Check(CheckArgs),
    /// Print frame, structure functions, consistency solution and reduced
    /// field at one state.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Catalog name (see `nonholo list`).
    #[arg(long)]
    system: Option<String>,
    /// Parameter override, repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = config::parse_param)]
    params: Vec<(String, f64)>,
    /// Reduced initial state: base coordinates then admissible momenta.
    #[arg(long, value_name = "V1,V2,...", value_parser = config::parse_list)]
    ic: Option<NumberList>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Step size (default 1e-3).
    #[arg(long)]
    dt: Option<f64>,
    /// Record every n-th step (default 10).
    #[arg(long)]
    stride: Option<usize>,
    /// Extra potential over the base coordinates, e.g. "0.5*(x^2+y^2)".
    #[arg(long, allow_hyphen_values = true)]
    potential: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with [run] and [params] sections; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// `all` or a catalog name.
    #[arg(long, default_value = "all")]
    system: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0, hide = true)]
    tolerance_scale: f64,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    system: String,
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = config::parse_param)]
    params: Vec<(String, f64)>,
    /// Reduced state: base coordinates then admissible momenta.
    #[arg(long, value_name = "V1,V2,...", value_parser = config::parse_list)]
    state: Option<NumberList>,
}

fn simulate(a: SimulateArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let file = match &a.config {
        Some(path) => FileConfig::load(path).map_err(|m| Failure {
            code: EXIT_USAGE,
            message: m,
        })?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        system: a.system,
        params: a.params,
        ic: a.ic.map(|l| l.0),
        t_end: a.t_end,
        dt: a.dt,
        stride: a.stride,
        potential: a.potential,
        out: a.out,
    };
    let cfg = config::merge(file, flags).map_err(|m| Failure {
        code: EXIT_USAGE,
        message: m,
    })?;
    commands::simulate_cmd(&cfg, stdout)
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::List => commands::list(&mut *stdout).map_err(|e| Failure {
            code: EXIT_USAGE,
            message: e.to_string(),
        }),
        Command::Simulate(a) => simulate(a, stdout),
        Command::Check(a) => {
            commands::check_cmd(&mut *stdout, &a.system, a.seed, a.tolerance_scale)
        }
        Command::Inspect(a) => commands::inspect_cmd(
            &mut *stdout,
            &a.system,
            &a.params,
            a.state.as_ref().map(|l| l.0.as_slice()),
        ),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "nonholo: {}", f.message);
            f.code
        }
    }
}
