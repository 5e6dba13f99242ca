use ephs_assemble::{DaeSystem, Evaluation, SlotKind};
use ephs_components::{Coords, Value};
use ephs_geom::{Convention, GroupElement, Twist};
use nalgebra::DVector;

use crate::newton::{Newton, NewtonStats};
use crate::{IntegratorConfig, Method, SimError, SystemState};

const SEMI: Convention = Convention::SemidirectProduct;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub newton: NewtonStats,
    /// `‖g‖∞` of the algebraic rows at the accepted stage.
    pub algebraic_residual: f64,
}

/// Where the vector-valued states sit in `x`, `ẋ` and the packed vector `V`.
#[derive(Debug, Clone)]
struct Split {
    /// `(slot, offset in V, offset in ẋ, dim)`
    vectors: Vec<(usize, usize, usize, usize)>,
    nv: usize,
}

impl Split {
    fn new(sys: &DaeSystem) -> Self {
        let mut vectors = Vec::new();
        let mut nv = 0;
        for (i, s) in sys.layout.differential.iter().enumerate() {
            if s.kind == SlotKind::Vector {
                vectors.push((i, nv, s.offset, s.dim));
                nv += s.dim;
            }
        }
        Self { vectors, nv }
    }

    fn pack(&self, x: &[Value]) -> DVector<f64> {
        let mut v = DVector::zeros(self.nv);
        for &(i, o, _, d) in &self.vectors {
            v.rows_mut(o, d).copy_from_slice(x[i].vector().as_slice());
        }
        v
    }

    fn unpack(&self, x: &mut [Value], v: &[f64]) {
        for &(i, o, _, d) in &self.vectors {
            x[i] = Value::Vector(Coords::from_slice(&v[o..o + d]));
        }
    }

    fn rates(&self, xdot: &[f64]) -> DVector<f64> {
        let mut v = DVector::zeros(self.nv);
        for &(_, o, r, d) in &self.vectors {
            v.rows_mut(o, d).copy_from_slice(&xdot[r..r + d]);
        }
        v
    }
}

/// Steps every pose slot of `x` along its trivialized rate in `xdot`.
fn advance_poses(sys: &DaeSystem, x: &mut [Value], xdot: &[f64], h: f64, cayley: bool) {
    for (i, s) in sys.layout.differential.iter().enumerate() {
        let r = &xdot[s.offset..s.offset + s.dim];
        match &s.kind {
            SlotKind::Vector => {}
            SlotKind::Pose => {
                let xi = h * Twist::from_slice(r);
                let f = if cayley { GroupElement::cay(&xi, SEMI) } else { GroupElement::exp(&xi, SEMI) };
                x[i] = Value::Pose(x[i].pose().then(&f));
            }
            SlotKind::Subgroup(g) => {
                let c = Coords::from_slice(r).scale(h);
                x[i] = Value::Pose(x[i].pose().then(&g.exp(&c)));
            }
        }
    }
}

fn nan(n: usize) -> DVector<f64> {
    DVector::from_element(n, f64::NAN)
}

/// One-step integrator over an assembled system. Keeps the Newton Jacobian
/// between steps.
#[derive(Debug, Clone)]
pub struct Integrator<'a> {
    sys: &'a DaeSystem,
    cfg: IntegratorConfig,
    split: Split,
    newton: Newton,
}

impl<'a> Integrator<'a> {
    pub fn new(sys: &'a DaeSystem, cfg: &IntegratorConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        Ok(Self { sys, cfg: cfg.clone(), split: Split::new(sys), newton: Newton::new() })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    /// Advances `st` by one step of size `h`.
    pub fn step(&mut self, st: &SystemState) -> Result<(SystemState, StepReport), SimError> {
        let (nv, nz) = (self.split.nv, self.sys.layout.nz);
        let h = self.cfg.h;
        let vn = self.split.pack(&st.x);
        let (sys, split) = (self.sys, &self.split);
        let eval = |x: &[Value], z: &[f64]| -> Option<Evaluation> { sys.eval(x, z).ok() };

        let (x, z, stats) = match self.cfg.method {
            Method::LieMidpoint => {
                // unknowns (V_{n+1}, z); stage at the midpoint of V
                let stage = |w: &DVector<f64>| -> Option<(Vec<Value>, Evaluation, Evaluation)> {
                    let vmid = (&vn + w.rows(0, nv)) * 0.5;
                    let z = &w.as_slice()[nv..];
                    let mut xa = st.x.clone();
                    split.unpack(&mut xa, vmid.as_slice());
                    let ea = eval(&xa, z)?;
                    let mut xb = xa.clone();
                    advance_poses(sys, &mut xb, &ea.rates, h, true);
                    let eb = eval(&xb, z)?;
                    Some((xb, ea, eb))
                };
                let f = |w: &DVector<f64>| -> DVector<f64> {
                    let Some((_, ea, eb)) = stage(w) else { return nan(nv + nz) };
                    let mut r = DVector::zeros(nv + nz);
                    let fv = (split.rates(&ea.rates) + split.rates(&eb.rates)) * (0.5 * h);
                    r.rows_mut(0, nv).copy_from(&(w.rows(0, nv) - &vn - fv));
                    for k in 0..nz {
                        r[nv + k] = 0.5 * (ea.algebraic[k] + eb.algebraic[k]);
                    }
                    r
                };
                let mut w = DVector::zeros(nv + nz);
                w.rows_mut(0, nv).copy_from(&vn);
                w.rows_mut(nv, nz).copy_from_slice(&st.z);
                let stats = solve(&mut self.newton, &self.cfg, f, &mut w, st.t)?;
                let (mut xb, _, _) = stage(&w).expect("converged stage evaluates");
                split.unpack(&mut xb, &w.as_slice()[..nv]);
                (xb, w.as_slice()[nv..].to_vec(), stats)
            }
            Method::LieEuler => {
                // unknowns z; the constraint is imposed at the new velocities
                let stage = |z: &[f64]| -> Option<(Evaluation, DVector<f64>, Evaluation)> {
                    let ea = eval(&st.x, z)?;
                    let v1 = &vn + split.rates(&ea.rates) * h;
                    let mut x1 = st.x.clone();
                    split.unpack(&mut x1, v1.as_slice());
                    let eb = eval(&x1, z)?;
                    Some((ea, v1, eb))
                };
                let f = |w: &DVector<f64>| -> DVector<f64> {
                    match stage(w.as_slice()) {
                        Some((_, _, eb)) => DVector::from_vec(eb.algebraic),
                        None => nan(nz),
                    }
                };
                let mut w = DVector::from_column_slice(&st.z);
                let stats = if nz > 0 {
                    solve(&mut self.newton, &self.cfg, f, &mut w, st.t)?
                } else {
                    NewtonStats { iterations: 0, residual: 0.0, jacobians: 0 }
                };
                let Some((ea, v1, _)) = stage(w.as_slice()) else {
                    return Err(SimError::NewtonDiverged { t: st.t, residual: f64::NAN, iterations: stats.iterations });
                };
                let mut x1 = st.x.clone();
                advance_poses(sys, &mut x1, &ea.rates, h, false);
                split.unpack(&mut x1, v1.as_slice());
                (x1, w.as_slice().to_vec(), stats)
            }
        };
        let next = SystemState { t: st.t + h, x, z };
        Ok((next, StepReport { newton: stats, algebraic_residual: if nz > 0 { stats.residual } else { 0.0 } }))
    }

}

fn solve(
    newton: &mut Newton,
    cfg: &IntegratorConfig,
    f: impl FnMut(&DVector<f64>) -> DVector<f64>,
    w: &mut DVector<f64>,
    t: f64,
) -> Result<NewtonStats, SimError> {
    if w.is_empty() {
        return Ok(NewtonStats { iterations: 0, residual: 0.0, jacobians: 0 });
    }
    newton
        .solve(f, w, cfg.newton_tol, cfg.newton_max_iter)
        .map_err(|e| SimError::NewtonDiverged { t, residual: e.residual, iterations: e.iterations })
}

/// Advances `state` by one step with a fresh integrator.
pub fn step(sys: &DaeSystem, state: &SystemState, cfg: &IntegratorConfig) -> Result<SystemState, SimError> {
    Ok(Integrator::new(sys, cfg)?.step(state)?.0)
}
