use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// First order: multipliers solved against the constraint at the new
    /// velocities, then explicit updates with exponential pose steps.
    LieEuler,
    /// Second order: implicit midpoint on vector states, Cayley pose steps
    /// with the stage twist, pose-dependent terms averaged over both ends.
    LieMidpoint,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::LieEuler => "lie-euler",
            Method::LieMidpoint => "lie-midpoint",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "lie-euler" => Some(Method::LieEuler),
            "lie-midpoint" => Some(Method::LieMidpoint),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub h: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub record_every: usize,
    /// Re-derive the relative joint pose from the body poses when they disagree,
    /// instead of failing.
    pub reconcile_relative_poses: bool,
}

impl IntegratorConfig {
    pub fn new(method: Method, h: f64, t_end: f64) -> Self {
        Self {
            method,
            h,
            t_end,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            record_every: 1,
            reconcile_relative_poses: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.into()));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad("step size must be positive");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("end time must be non-negative");
        }
        if !(self.newton_tol > 0.0) {
            return bad("Newton tolerance must be positive");
        }
        if self.newton_max_iter == 0 {
            return bad("Newton needs at least one iteration");
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`, rounding to the nearest whole step.
    pub fn steps(&self) -> usize {
        (self.t_end / self.h - 1e-9).ceil().max(0.0) as usize
    }
}
