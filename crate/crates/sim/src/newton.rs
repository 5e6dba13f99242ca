//! Simplified Newton iteration with a finite-difference Jacobian that is kept
//! between solves and refreshed only when convergence stalls.

use nalgebra::{DMatrix, DVector, LU};

/// Relative finite-difference increment.
pub const FD_STEP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residual: f64,
    pub jacobians: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonFailure {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Newton {
    lu: Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

pub fn jacobian(f: &mut impl FnMut(&DVector<f64>) -> DVector<f64>, w: &DVector<f64>, r0: &DVector<f64>) -> DMatrix<f64> {
    let n = w.len();
    let mut j = DMatrix::zeros(r0.len(), n);
    let mut wp = w.clone();
    for c in 0..n {
        let d = FD_STEP * w[c].abs().max(1.0);
        wp[c] = w[c] + d;
        let rp = f(&wp);
        wp[c] = w[c];
        j.set_column(c, &((rp - r0) / d));
    }
    j
}

impl Newton {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops the stored Jacobian.
    pub fn reset(&mut self) {
        self.lu = None;
    }

    /// Solves `f(w) = 0` from `w`, in place, to `‖f‖∞ ≤ tol`, then applies one
    /// more correction.
    pub fn solve(
        &mut self,
        mut f: impl FnMut(&DVector<f64>) -> DVector<f64>,
        w: &mut DVector<f64>,
        tol: f64,
        max_iter: usize,
    ) -> Result<NewtonStats, NewtonFailure> {
        let mut r = f(w);
        let mut norm = inf_norm(&r);
        let mut jacobians = 0;
        let mut fresh = false;
        let mut polished = false;
        for it in 0..max_iter {
            if norm.is_nan() {
                return Err(NewtonFailure { iterations: it, residual: norm });
            }
            if norm <= tol && (polished || norm == 0.0) {
                return Ok(NewtonStats { iterations: it, residual: norm, jacobians });
            }
            if norm <= tol {
                polished = true;
            }
            if self.lu.is_none() {
                self.lu = Some(jacobian(&mut f, w, &r).lu());
                jacobians += 1;
                fresh = true;
            }
            let dw = match self.lu.as_ref().unwrap().solve(&r) {
                Some(dw) if dw.iter().all(|v| v.is_finite()) => dw,
                _ if !fresh => {
                    self.lu = None;
                    continue;
                }
                _ => return Err(NewtonFailure { iterations: it, residual: norm }),
            };
            let trial = &*w - dw;
            let rt = f(&trial);
            let nt = inf_norm(&rt);
            if polished && !(nt < norm) {
                // roundoff floor
                return Ok(NewtonStats { iterations: it + 1, residual: norm, jacobians });
            }
            if !fresh && !(nt <= 0.25 * norm) && nt > tol {
                // stale Jacobian: refresh and retry from the better point
                self.lu = None;
                if nt < norm {
                    *w = trial;
                    r = rt;
                    norm = nt;
                }
                continue;
            }
            *w = trial;
            r = rt;
            norm = nt;
            fresh = false;
        }
        if norm <= tol {
            return Ok(NewtonStats { iterations: max_iter, residual: norm, jacobians });
        }
        Err(NewtonFailure { iterations: max_iter, residual: norm })
    }
}
