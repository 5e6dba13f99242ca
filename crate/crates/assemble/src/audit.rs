use ephs_components::{Component, ComponentKind, Value};
use ephs_geom::untrivialize;

use crate::error::AssembleError;
use crate::system::{DaeSystem, SlotKind};

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPower {
    pub path: String,
    pub kind: ComponentKind,
    /// `Σ ⟨e|f⟩` over the component's power ports, minus `⟨λ|C e⟩` for constraints.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub path: String,
    /// `‖C e‖` of the velocity constraint.
    pub velocity: f64,
    /// Position drift, when both bodies can be traced through the offsets.
    pub drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    /// Power balance of every reversible and irreversible component.
    pub components: Vec<ComponentPower>,
    /// Largest `|Σ ⟨e|f⟩|` among reversible components.
    pub dirac_power: f64,
    /// `E_tot = Σ E_storage + θ0 s_env`.
    pub energy: f64,
    /// `dE_tot/dt` along the supplied `ẋ`.
    pub energy_rate: f64,
    /// Exergy destruction rate `Σ ⟨e|f⟩` over irreversible components.
    pub destruction: f64,
    pub constraints: Vec<ConstraintReport>,
    /// Euclidean norm of the full residual.
    pub residual: f64,
}

impl AuditReport {
    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.power.is_finite())
            && [self.dirac_power, self.energy, self.energy_rate, self.destruction, self.residual]
                .iter()
                .all(|v| v.is_finite())
            && self.constraints.iter().all(|c| c.velocity.is_finite() && c.drift.is_none_or(f64::is_finite))
    }
}

impl DaeSystem {
    pub fn audit(&self, x: &[Value], xdot: &[f64], z: &[f64]) -> Result<AuditReport, AssembleError> {
        let r = self.residual(x, xdot, z)?;
        let ev = self.eval(x, z)?;
        let v = &ev.values;

        let mut powers = vec![0.0; self.components.len()];
        for p in &self.ports {
            powers[p.comp] += Value::pair(&v[p.effort], &v[p.flow]);
        }
        let velocity = self.constraint_norms(&ev);
        let mut components = Vec::new();
        let mut destruction = 0.0;
        let mut dirac_power: f64 = 0.0;
        for (i, (path, c)) in self.components.iter().enumerate() {
            let kind = c.kind();
            let mut power = powers[i];
            match kind {
                ComponentKind::Reversible => {
                    if let Component::Constraint { .. } = c {
                        // Flows are C*λ, so Σ⟨e|f⟩ = ⟨λ|C e⟩.
                        let lambda = self.multiplier(path, z).expect("multiplier");
                        let (_, n) = (path, self.rows.iter().find(|r| &r.0 == path).unwrap().2);
                        let ce = v[n].vector();
                        power -= lambda.iter().zip(ce.as_slice()).map(|(a, b)| a * b).sum::<f64>();
                    }
                    dirac_power = dirac_power.max(power.abs());
                }
                ComponentKind::Irreversible => destruction += power,
                _ => continue,
            }
            components.push(ComponentPower { path: path.clone(), kind, power });
        }

        let mut energy_rate = 0.0;
        for (s, (xv, e)) in self.layout.differential.iter().zip(x.iter().zip(self.storage_efforts(x)?)) {
            let rate = &xdot[s.offset..s.offset + s.dim];
            energy_rate += match (&s.kind, self.component(&s.storage)) {
                (_, Some(Component::Environment { .. })) => self.theta0 * rate[0],
                (SlotKind::Pose, _) => {
                    let xi = ephs_components::Coords::from_slice(rate).twist();
                    e.cotangent().pair(&untrivialize(&xv.pose(), &xi))
                }
                _ => e.vector().as_slice().iter().zip(rate).map(|(a, b)| a * b).sum(),
            };
        }

        let constraints = velocity
            .into_iter()
            .map(|(path, vel)| {
                let drift = self.drift_chains.iter().find(|d| d.constraint == path).map(|d| d.drift(x));
                ConstraintReport { path, velocity: vel, drift }
            })
            .collect();
        Ok(AuditReport {
            components,
            dirac_power,
            energy: self.total_energy(x)?,
            energy_rate,
            destruction,
            constraints,
            residual: r.iter().map(|v| v * v).sum::<f64>().sqrt(),
        })
    }

    fn storage_efforts(&self, x: &[Value]) -> Result<Vec<Value>, AssembleError> {
        self.layout
            .differential
            .iter()
            .zip(x)
            .map(|(s, v)| {
                let c = self.component(&s.storage).expect("storage box");
                c.storage_effort(v).map_err(|source| AssembleError::Component { path: s.storage.clone(), source })
            })
            .collect()
    }

    /// Position drift of every traced constraint.
    pub fn drifts(&self, x: &[Value]) -> Vec<(String, f64)> {
        self.drift_chains.iter().map(|d| (d.constraint.clone(), d.drift(x))).collect()
    }
}
