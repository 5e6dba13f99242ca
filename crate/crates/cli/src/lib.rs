//! The `ephs` command: run simulations, flatten and check model files.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ephs_assemble::{assemble, AssembleOptions, DaeSystem, SlotKind, DEFAULT_THETA0};
use ephs_components::{Component, Coords, Value};
use ephs_core::{flatten, FlatBinding, Pattern};
use ephs_geom::{Convention, GroupElement, Vec3};
use ephs_lang::{load, lower, serialize_pattern, PatternDecl};
use ephs_sim::{project_initial, simulate, IntegratorConfig, Method, ProjectOptions, SimError, SystemState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

pub const THETA0_VAR: &str = "EPHS_THETA0";

#[derive(Debug, Parser)]
#[command(name = "ephs", version, about = "Exergetic port-Hamiltonian models: simulate, flatten, check")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a model and write its trajectory and audit summary.
    Run(RunArgs),
    /// Print the flattened pattern of a model.
    Flatten {
        model: PathBuf,
        /// Print canonical JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Validate a model and print its equations.
    Check {
        model: PathBuf,
        #[arg(long)]
        theta0: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value = "lie-midpoint", value_parser = ["lie-euler", "lie-midpoint"])]
    pub method: String,
    /// Trajectory CSV; the audit goes next to it as `.audit.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    /// Reference temperature; overrides every environment of the model.
    #[arg(long)]
    pub theta0: Option<f64>,
    /// Initial value of a state, `JUNCTION=v1,v2,...`. Vectors take one value
    /// per component, poses `x,y,z` or `wx,wy,wz,x,y,z` (rotation vector
    /// first), joint poses their joint coordinates. Unset states start at zero
    /// or the identity.
    #[arg(long = "init", value_name = "JUNCTION=VALUES")]
    pub init: Vec<String>,
    /// Re-derive relative joint poses from inconsistent body poses.
    #[arg(long)]
    pub reconcile: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Default reference temperature: `EPHS_THETA0` when set, else 298.15 K.
pub fn default_theta0() -> Result<f64, CliError> {
    match std::env::var(THETA0_VAR) {
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
            _ => Err(invalid(format!("{THETA0_VAR}={v} is not a positive temperature"))),
        },
        Err(_) => Ok(DEFAULT_THETA0),
    }
}

/// Loads, lowers and flattens a model file.
pub fn flat_model(path: &Path, theta0: f64) -> Result<(Pattern, FlatBinding<Component>), CliError> {
    let m = load(path).map_err(invalid)?;
    let (p, b) = lower(&m, theta0).map_err(|d| invalid(d.in_file(path)))?;
    flatten(&p, &b).map_err(invalid)
}

fn system(path: &Path, theta0: Option<f64>) -> Result<DaeSystem, CliError> {
    let default = match theta0 {
        Some(t) => t,
        None => default_theta0()?,
    };
    let (p, b) = flat_model(path, default)?;
    assemble(&p, &b, AssembleOptions { theta0 }).map_err(invalid)
}

fn numbers(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()
        .ok_or_else(|| invalid(format!("`{s}` is not a list of numbers")))
}

/// Applies `--init` assignments to the zero state of `sys`.
pub fn initial_state(sys: &DaeSystem, inits: &[String]) -> Result<SystemState, CliError> {
    let layout = &sys.layout;
    let mut st = SystemState::zero(layout);
    for a in inits {
        let (name, values) = a.split_once('=').ok_or_else(|| invalid(format!("--init `{a}`: expected JUNCTION=VALUES")))?;
        let i = layout.slot_index(name.trim()).ok_or_else(|| {
            let names: Vec<&str> = layout.differential.iter().map(|s| s.junction.as_str()).collect();
            invalid(format!("--init `{a}`: no state named `{name}` (states: {})", names.join(", ")))
        })?;
        let slot = &layout.differential[i];
        let v = numbers(values)?;
        let bad = |want: &str| invalid(format!("--init `{a}`: `{name}` takes {want}, got {} values", v.len()));
        st.x[i] = match &slot.kind {
            SlotKind::Vector if v.len() == slot.dim => Value::Vector(Coords::from_slice(&v)),
            SlotKind::Vector => return Err(bad(&slot.dim.to_string())),
            SlotKind::Pose => {
                let (w, r) = match v.len() {
                    3 => (Vec3::zeros(), Vec3::new(v[0], v[1], v[2])),
                    6 => (Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5])),
                    _ => return Err(bad("3 or 6")),
                };
                Value::Pose(GroupElement::from_parts(ephs_geom::so3::exp(&w), r, Convention::SemidirectProduct))
            }
            SlotKind::Subgroup(g) if v.len() == g.dim() => Value::Pose(g.exp(&Coords::from_slice(&v))),
            SlotKind::Subgroup(g) => return Err(bad(&g.dim().to_string())),
        };
    }
    Ok(st)
}

fn audit_path(csv: &Path) -> PathBuf {
    csv.with_extension("audit.json")
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        x.into()
    } else {
        serde_json::Value::Null
    }
}

pub fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let sys = system(&a.model, a.theta0)?;
    let method = Method::from_name(&a.method).ok_or_else(|| invalid(format!("unknown method `{}`", a.method)))?;
    let mut cfg = IntegratorConfig::new(method, a.dt, a.t_end);
    cfg.record_every = a.record_every;
    cfg.reconcile_relative_poses = a.reconcile;
    cfg.validate().map_err(invalid)?;

    let st = initial_state(&sys, &a.init)?;
    let st = project_initial(&sys, &st, &ProjectOptions { reconcile: a.reconcile, adjustable: None }).map_err(invalid)?;
    let traj = simulate(&sys, &st, &cfg).map_err(invalid)?;

    let csv_path = a.out.clone().unwrap_or_else(|| {
        PathBuf::from(a.model.file_stem().map_or("trajectory".into(), |s| s.to_string_lossy().into_owned())).with_extension("csv")
    });
    let file = std::fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    traj.write_csv(std::io::BufWriter::new(file)).map_err(|e| io_err(&csv_path, e))?;

    let s = traj.summary();
    let (status, error) = match &traj.aborted {
        None => ("ok", serde_json::Value::Null),
        Some(e) => ("newton_diverged", e.to_string().into()),
    };
    let summary = serde_json::json!({
        "model": a.model.display().to_string(),
        "method": method.name(),
        "dt": a.dt,
        "t_end": a.t_end,
        "record_every": a.record_every,
        "theta0": sys.theta0,
        "status": status,
        "error": error,
        "samples": s.samples,
        "t_final": s.t_final,
        "energy_drift": finite_or_null(s.energy_drift),
        "max_destruction_negativity": finite_or_null(s.destruction_negativity),
        "max_entropy_decrease": finite_or_null(s.entropy_decrease),
        "max_constraint_residual": finite_or_null(s.max_algebraic_residual),
        "final_drift": s.final_drift.map_or(serde_json::Value::Null, finite_or_null),
    });
    let audit = audit_path(&csv_path);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    std::fs::write(&audit, text).map_err(|e| io_err(&audit, e))?;

    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(|e| CliError::Io(e.to_string()));
    w(out, format!("wrote {} ({} rows) and {}", csv_path.display(), s.samples, audit.display()))?;
    match &traj.aborted {
        Some(e @ SimError::NewtonDiverged { .. }) => {
            w(out, format!("stopped early: {e}"))?;
            Ok(EXIT_DIVERGED)
        }
        Some(e) => Err(invalid(e)),
        None => Ok(EXIT_OK),
    }
}

pub fn cmd_flatten(model: &Path, json: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let (p, _) = flat_model(model, default_theta0()?)?;
    let text = if json { p.to_canonical_json() } else { serialize_pattern(&PatternDecl::from_pattern(&p)) };
    writeln!(out, "{text}").map_err(|e| CliError::Io(e.to_string()))?;
    Ok(EXIT_OK)
}

pub fn cmd_check(model: &Path, theta0: Option<f64>, out: &mut dyn Write) -> Result<i32, CliError> {
    let sys = system(model, theta0)?;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    for line in sys.dump() {
        writeln!(out, "{line}").map_err(io)?;
    }
    writeln!(out, "ok: {} states, {} algebraic unknowns, theta0 = {}", sys.layout.differential.len(), sys.layout.nz, sys.theta0)
        .map_err(io)?;
    Ok(EXIT_OK)
}

/// Runs one command, printing results to `out` and errors to `err`; returns
/// the exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let r = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Flatten { model, json } => cmd_flatten(model, *json, out),
        Command::Check { model, theta0 } => cmd_check(model, *theta0, out),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}
