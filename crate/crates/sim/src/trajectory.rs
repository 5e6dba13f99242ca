use std::io::Write;

use ephs_assemble::DaeSystem;

use crate::integrator::Integrator;
use crate::project::consistent_algebraic;
use crate::{IntegratorConfig, SimError, SystemState};

/// Initial states must satisfy the algebraic rows to this tolerance.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Bookkeeping recorded alongside each state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// `Σ E_storage + θ0 s`.
    pub energy: f64,
    pub mechanical_energy: f64,
    pub entropy: f64,
    /// Exergy destruction rate at the recorded state.
    pub destruction: f64,
    /// `‖g‖∞` of the algebraic rows at the stage that produced this state.
    pub algebraic_residual: f64,
    /// Largest position drift over all traced constraints.
    pub drift: Option<f64>,
    pub newton_iterations: usize,
}

#[derive(Debug)]
pub struct Trajectory {
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<SystemState>,
    pub audit: Vec<Sample>,
    /// Set when the run stopped early; the recorded prefix is kept.
    pub aborted: Option<SimError>,
}

/// Whole-run figures derived from the audit series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub samples: usize,
    pub t_final: f64,
    /// `max |E(t) − E(0)| / max(1, |E(0)|)`.
    pub energy_drift: f64,
    /// Most negative destruction rate, as a non-negative number.
    pub destruction_negativity: f64,
    /// Largest decrease of entropy between consecutive samples.
    pub entropy_decrease: f64,
    pub max_algebraic_residual: f64,
    pub final_drift: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&SystemState> {
        self.states.last()
    }

    pub fn summary(&self) -> Summary {
        let e0 = self.audit.first().map_or(0.0, |s| s.energy);
        let scale = e0.abs().max(1.0);
        let mut sm = Summary {
            samples: self.len(),
            t_final: self.times.last().copied().unwrap_or(0.0),
            energy_drift: 0.0,
            destruction_negativity: 0.0,
            entropy_decrease: 0.0,
            max_algebraic_residual: 0.0,
            final_drift: self.audit.last().and_then(|s| s.drift),
        };
        for (i, a) in self.audit.iter().enumerate() {
            sm.energy_drift = sm.energy_drift.max((a.energy - e0).abs() / scale);
            sm.destruction_negativity = sm.destruction_negativity.max(0.0 - a.destruction);
            sm.max_algebraic_residual = sm.max_algebraic_residual.max(a.algebraic_residual);
            if i > 0 {
                sm.entropy_decrease = sm.entropy_decrease.max(self.audit[i - 1].entropy - a.entropy);
            }
        }
        sm
    }

    /// Writes `t` and every column with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(std::iter::once("t").chain(self.columns.iter().map(String::as_str)))?;
        for (t, st) in self.times.iter().zip(&self.states) {
            let cols = st.columns_for_csv();
            out.write_record(std::iter::once(*t).chain(cols).map(|v| format!("{v:.16e}")))?;
        }
        out.flush()?;
        Ok(())
    }
}

impl SystemState {
    fn columns_for_csv(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for v in &self.x {
            match v {
                ephs_components::Value::Pose(q) => {
                    for r in 0..3 {
                        out.extend((0..3).map(|c| q.rot[(r, c)]));
                    }
                    out.extend(q.trans.iter().copied());
                }
                v => out.extend_from_slice(v.vector().as_slice()),
            }
        }
        out.extend_from_slice(&self.z);
        out
    }
}

fn sample(sys: &DaeSystem, st: &SystemState, algebraic_residual: f64, newton_iterations: usize) -> Sample {
    let audit = sys.eval(&st.x, &st.z).and_then(|ev| sys.audit(&st.x, &ev.rates, &st.z));
    let (energy, destruction) = match audit {
        Ok(a) => (a.energy, a.destruction),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Sample {
        energy,
        mechanical_energy: sys.mechanical_energy(&st.x).unwrap_or(f64::NAN),
        entropy: sys.environment_entropy(&st.x),
        destruction,
        algebraic_residual,
        drift: sys.drifts(&st.x).into_iter().map(|(_, d)| d).reduce(f64::max),
        newton_iterations,
    }
}

/// Integrates from `state0` to `cfg.t_end`, recording every `record_every`
/// steps and the final state. Errors before the first step are returned;
/// later failures end the run with [`Trajectory::aborted`] set.
pub fn simulate(sys: &DaeSystem, state0: &SystemState, cfg: &IntegratorConfig) -> Result<Trajectory, SimError> {
    let mut integ = Integrator::new(sys, cfg)?;
    let mut st = consistent_algebraic(sys, state0, CONSISTENCY_TOL)?;
    let t0 = st.t;
    let residual0 = sys.eval(&st.x, &st.z)?.algebraic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut traj = Trajectory {
        columns: sys.layout.column_names(),
        times: vec![t0],
        states: vec![st.clone()],
        audit: vec![sample(sys, &st, residual0, 0)],
        aborted: None,
    };
    let n = cfg.steps();
    for k in 1..=n {
        match integ.step(&st) {
            Ok((mut next, report)) => {
                next.t = t0 + k as f64 * cfg.h;
                st = next;
                if k % cfg.record_every == 0 || k == n {
                    traj.times.push(st.t);
                    traj.audit.push(sample(sys, &st, report.algebraic_residual, report.newton.iterations));
                    traj.states.push(st.clone());
                }
            }
            Err(e) => {
                traj.aborted = Some(e);
                break;
            }
        }
    }
    Ok(traj)
}
