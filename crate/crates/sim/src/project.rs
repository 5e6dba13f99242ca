use ephs_assemble::{DaeSystem, SlotKind};
use ephs_components::Value;
use nalgebra::{DMatrix, DVector};

use crate::newton::FD_STEP;
use crate::{SimError, SystemState};

/// Largest position mismatch accepted between body poses and relative joint poses.
pub const POSITION_TOL: f64 = 1e-6;
/// Target for the algebraic rows after projection.
pub const VELOCITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProjectOptions {
    /// Re-derive relative joint poses from the body poses on mismatch.
    pub reconcile: bool,
    /// Vector states that may be adjusted; all of them when `None`.
    pub adjustable: Option<Vec<String>>,
}

fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    m.clone().pseudo_inverse(1e-12).expect("non-negative tolerance")
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Repairs relative poses, then makes the least change to the adjustable
/// vector states (and any change to the algebraic unknowns) that satisfies
/// the algebraic rows.
pub fn project_initial(sys: &DaeSystem, state: &SystemState, opts: &ProjectOptions) -> Result<SystemState, SimError> {
    state.check(sys)?;
    let mut st = state.clone();
    for chain in &sys.drift_chains {
        let mismatch = chain.drift(&st.x);
        if mismatch <= POSITION_TOL {
            continue;
        }
        let infeasible = || SimError::InfeasibleConstraint { constraint: chain.constraint.clone(), mismatch };
        if !opts.reconcile {
            return Err(infeasible());
        }
        let SlotKind::Subgroup(g) = &sys.layout.differential[chain.q_r].kind else {
            return Err(infeasible());
        };
        let qj1 = st.x[chain.q1].pose().then(&chain.o1);
        let qj2 = st.x[chain.q2].pose().then(&chain.o2);
        let rel = qj1.inverse().then(&qj2).log().map_err(|_| infeasible())?;
        st.x[chain.q_r] = Value::Pose(g.exp(&g.coords_of(&rel)));
        let left = chain.drift(&st.x);
        if left > POSITION_TOL {
            return Err(SimError::InfeasibleConstraint { constraint: chain.constraint.clone(), mismatch: left });
        }
    }

    // leave the velocities alone when the algebraic unknowns suffice
    if let Ok(st) = fit_velocities(sys, st.clone(), Some(&[])) {
        return Ok(st);
    }
    fit_velocities(sys, st, opts.adjustable.as_deref()).map_err(|left| {
        SimError::InconsistentInitialState(format!(
            "algebraic rows cannot be satisfied by adjusting the velocities (residual {left:.3e})"
        ))
    })
}

/// Solves the algebraic rows for `z` with `x` held fixed; fails when the rows
/// stay violated beyond `tol`.
pub fn consistent_algebraic(sys: &DaeSystem, state: &SystemState, tol: f64) -> Result<SystemState, SimError> {
    state.check(sys)?;
    fit_velocities(sys, state.clone(), Some(&[])).or_else(|_| {
        let left = inf_norm(&sys.eval(&state.x, &state.z)?.algebraic);
        if left <= tol {
            Ok(state.clone())
        } else {
            Err(SimError::InconsistentInitialState(format!(
                "algebraic rows violated by {left:.3e}; project the initial state first"
            )))
        }
    })
}

/// Gauss-Newton on the algebraic rows: least change to the adjustable vector
/// states, any change to `z`. Returns the remaining residual on failure.
fn fit_velocities(sys: &DaeSystem, mut st: SystemState, adjustable: Option<&[String]>) -> Result<SystemState, f64> {
    let mut cols = Vec::new();
    for (i, s) in sys.layout.differential.iter().enumerate() {
        let wanted = adjustable.is_none_or(|a| a.iter().any(|j| *j == s.junction));
        if s.kind == SlotKind::Vector && wanted {
            cols.extend((0..s.dim).map(|k| (i, k)));
        }
    }
    let nz = sys.layout.nz;
    let rows = |st: &SystemState| -> Vec<f64> {
        sys.eval(&st.x, &st.z).map(|e| e.algebraic).unwrap_or_else(|_| vec![f64::NAN; nz])
    };
    let nudge = |st: &SystemState, c: usize, d: f64| -> SystemState {
        let mut s = st.clone();
        if c < cols.len() {
            let (i, k) = cols[c];
            let mut v = s.x[i].vector();
            v.as_mut_slice()[k] += d;
            s.x[i] = Value::Vector(v);
        } else {
            s.z[c - cols.len()] += d;
        }
        s
    };
    for _ in 0..20 {
        let g0 = rows(&st);
        let norm = inf_norm(&g0);
        if norm <= VELOCITY_TOL {
            return Ok(st);
        }
        if !norm.is_finite() {
            return Err(norm);
        }
        let n = cols.len() + nz;
        let mut jac = DMatrix::zeros(g0.len(), n);
        for c in 0..n {
            let d = FD_STEP;
            let (gp, gm) = (rows(&nudge(&st, c, d)), rows(&nudge(&st, c, -d)));
            for r in 0..g0.len() {
                jac[(r, c)] = (gp[r] - gm[r]) / (2.0 * d);
            }
        }
        let a = jac.columns(0, cols.len()).into_owned();
        let zj = jac.columns(cols.len(), nz).into_owned();
        let g = DVector::from_vec(g0);
        let p = DMatrix::identity(g.len(), g.len()) - &zj * pinv(&zj);
        let dv = -pinv(&(&p * &a)) * (&p * &g);
        let dz = -pinv(&zj) * (&g + &a * &dv);
        for (c, d) in dv.iter().chain(dz.iter()).enumerate() {
            st = nudge(&st, c, *d);
        }
    }
    let left = inf_norm(&rows(&st));
    if left <= VELOCITY_TOL {
        Ok(st)
    } else {
        Err(left)
    }
}
