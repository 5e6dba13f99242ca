use ephs_assemble::{DaeSystem, SlotKind, VariableLayout};
use ephs_components::{Coords, Value};
use ephs_geom::GroupElement;

use crate::SimError;

/// Subgroup membership tolerance of relative joint poses.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Differential state `x` (poses, momenta, entropies, laid out by
/// [`VariableLayout`]) at time `t`, with the algebraic unknowns `z` (joint
/// velocities and multipliers) that go with it.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub x: Vec<Value>,
    pub z: Vec<f64>,
}

impl SystemState {
    /// Identity poses, zero vectors and zero algebraic unknowns at `t = 0`.
    pub fn zero(layout: &VariableLayout) -> Self {
        Self { t: 0.0, x: layout.initial_state(), z: vec![0.0; layout.nz] }
    }

    fn index(layout: &VariableLayout, junction: &str) -> usize {
        layout.slot_index(junction).unwrap_or_else(|| panic!("no state at junction `{junction}`"))
    }

    pub fn set_pose(&mut self, layout: &VariableLayout, junction: &str, q: GroupElement) -> &mut Self {
        self.x[Self::index(layout, junction)] = Value::Pose(q);
        self
    }

    pub fn set_vector(&mut self, layout: &VariableLayout, junction: &str, v: &[f64]) -> &mut Self {
        let i = Self::index(layout, junction);
        assert_eq!(layout.differential[i].dim, v.len(), "dimension of `{junction}`");
        self.x[i] = Value::Vector(Coords::from_slice(v));
        self
    }

    pub fn pose(&self, layout: &VariableLayout, junction: &str) -> GroupElement {
        self.x[Self::index(layout, junction)].pose()
    }

    pub fn vector(&self, layout: &VariableLayout, junction: &str) -> Coords {
        self.x[Self::index(layout, junction)].vector()
    }

    /// State columns followed by the algebraic unknowns, as named by
    /// [`VariableLayout::column_names`].
    pub fn columns(&self, layout: &VariableLayout) -> Vec<f64> {
        let mut out = Vec::new();
        layout.state_columns(&self.x, &mut out);
        out.extend_from_slice(&self.z);
        out
    }

    /// Checks finiteness, rotation validity and subgroup membership.
    pub fn check(&self, sys: &DaeSystem) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InconsistentInitialState(m));
        if self.x.len() != sys.layout.differential.len() || self.z.len() != sys.layout.nz {
            return bad("state does not match the system layout".into());
        }
        for (s, v) in sys.layout.differential.iter().zip(&self.x) {
            if !v.is_finite() {
                return bad(format!("non-finite state at `{}`", s.junction));
            }
            match (&s.kind, v) {
                (SlotKind::Vector, Value::Vector(c)) if c.len() == s.dim => {}
                (SlotKind::Pose, Value::Pose(q)) => {
                    if let Err(e) = q.check() {
                        return bad(format!("`{}`: {e}", s.junction));
                    }
                }
                (SlotKind::Subgroup(g), Value::Pose(q)) => {
                    let err = g.membership_error(q).map_err(|e| SimError::InconsistentInitialState(e.to_string()))?;
                    if err > MEMBERSHIP_TOL {
                        return bad(format!("`{}` leaves the joint subgroup by {err:.3e}", s.junction));
                    }
                }
                _ => return bad(format!("wrong kind of value at `{}`", s.junction)),
            }
        }
        if self.z.iter().any(|v| !v.is_finite()) {
            return bad("non-finite algebraic unknowns".into());
        }
        Ok(())
    }
}
