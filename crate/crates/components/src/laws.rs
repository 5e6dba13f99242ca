//! Evaluation laws of the reversible and irreversible catalog entries, in typed form.
//!
//! Flows follow the junction rule in which the inner flows at a junction sum to
//! the outer flows and a storage port's flow is the state rate.

use ephs_geom::{ad_star, cotrivialize, untrivialize, Convention, GroupElement, MaterialCotangent, MaterialTangent, Twist, Wrench};
use nalgebra::{DMatrix, DVector};

use crate::error::ComponentError;
use crate::joint::JointGeometry;
use crate::value::Coords;

const SEMI: Convention = Convention::SemidirectProduct;

/// Kinematic coupling in trivialized coordinates: `(q.f, p.f) = (−p.e, q.e)`.
pub fn pkc_coords(q_e: &Coords, p_e: &Coords) -> (Coords, Coords) {
    (-*p_e, *q_e)
}

/// Kinematic coupling of a body: `q.f = −T_eL_q(p.e)`, `p.f = T*_eL_q(q.e)`.
pub fn pkc_body(q: &GroupElement, q_e: &MaterialCotangent, p_e: &Twist) -> (MaterialTangent, Wrench) {
    (untrivialize(q, p_e).scale(-1.0), cotrivialize(q, q_e))
}

/// Lie-Poisson structure: `p.f = −ad*_{p.e}(p.x)`.
pub fn lie_poisson(p: &Wrench, u: &Twist) -> Wrench {
    -ad_star(SEMI, u, p)
}

/// Offset, velocity part: `pj.e = Ad_{o⁻¹}(p.e)`.
pub fn offset_effort(o: &GroupElement, p_e: &Twist) -> Twist {
    o.inverse().adjoint(p_e)
}

/// Offset, force part: `p.f = −Ad*_{o⁻¹}(pj.f)`.
pub fn offset_flow(o: &GroupElement, pj_f: &Wrench) -> Wrench {
    -o.inverse().coadjoint(pj_f)
}

/// Constraint forces `(pj1.f, pj2.f, p_r.f) = C*(q_r) λ` with
/// `C(q_r) = [Ad_{I(q_r⁻¹)}, −id, i]`.
pub fn constraint_flows(joint: &JointGeometry, q_r: &GroupElement, lambda: &Wrench) -> (Wrench, Wrench, Coords) {
    (q_r.inverse().coadjoint(lambda), -*lambda, joint.restrict(lambda))
}

/// Velocity constraint `C(q_r) e = Ad_{I(q_r⁻¹)}(e_j1) − e_j2 + i(e_r)`.
pub fn constraint_residual(joint: &JointGeometry, q_r: &GroupElement, e_j1: &Twist, e_j2: &Twist, e_r: &Coords) -> Twist {
    q_r.inverse().adjoint(e_j1) - *e_j2 + joint.include(e_r)
}

fn quad(mu: &DMatrix<f64>, u: &Coords) -> (DVector<f64>, f64) {
    let v = DVector::from_column_slice(u.as_slice());
    let mv = mu * &v;
    let q = v.dot(&mv);
    (mv, q)
}

/// Friction: `p.f = μ♭(u)`, `s.f = −μ(u,u)/θ` with `θ = θ0 + s.e`.
pub fn friction(mu: &DMatrix<f64>, theta0: f64, u: &Coords, s_e: f64) -> Result<(Coords, f64), ComponentError> {
    let theta = theta0 + s_e;
    if !(theta > 0.0) {
        return Err(ComponentError::NonPositiveTemperature(theta));
    }
    let (mv, q) = quad(mu, u);
    Ok((Coords::from_slice(mv.as_slice()), -q / theta))
}

/// The Onsager operator `M` with `(p.f, s.f) = M (p.e, s.e)`:
/// `M = (1/θ0) [[θ μ♭, −μ(u,·)], [−μ(u,·)ᵀ, μ(u,u)/θ]]`.
pub fn onsager_matrix(mu: &DMatrix<f64>, theta0: f64, u: &Coords, theta: f64) -> DMatrix<f64> {
    let k = u.len();
    let (mv, q) = quad(mu, u);
    let mut m = DMatrix::zeros(k + 1, k + 1);
    m.view_mut((0, 0), (k, k)).copy_from(&(mu * theta));
    for i in 0..k {
        m[(i, k)] = -mv[i];
        m[(k, i)] = -mv[i];
    }
    m[(k, k)] = q / theta;
    m / theta0
}
