//! Demonstration parameters for the two-body system: equal bodies with
//! `J = diag(1, 2, 3)`, `m = 1`, a revolute joint about `z` whose frame sits
//! half a unit above body 1 and half a unit below body 2.

use ephs_components::{make_revolute, BodyParams, Coords, EnvParams, JointParams, Potential};
use ephs_geom::{Convention, GroupElement, Mat3, Twist, Vec3, Wrench};
use nalgebra::DMatrix;

use crate::builders::{build_basic_mbs, Model};
use crate::ModelError;

const SEMI: Convention = Convention::SemidirectProduct;

pub const THETA0: f64 = 300.0;

pub fn body() -> BodyParams {
    BodyParams { m: 1.0, inertia: Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 3.0)), g: Vec3::new(0.0, 0.0, -9.81) }
}

/// Revolute joint with friction coefficient `mu` and stiffness `k` on the joint angle.
pub fn joint(mu: f64, k: f64) -> Result<JointParams, ModelError> {
    let potential = if k == 0.0 { Potential::Zero } else { Potential::QuadraticLog(DMatrix::from_element(1, 1, k)) };
    Ok(make_revolute(
        Vec3::z(),
        GroupElement::from_translation(Vec3::new(0.0, 0.0, 0.5), SEMI),
        GroupElement::from_translation(Vec3::new(0.0, 0.0, -0.5), SEMI),
        mu,
        potential,
    )?)
}

pub fn env() -> EnvParams {
    EnvParams { theta0: THETA0 }
}

pub fn mbs(mu: f64, k: f64) -> Result<Model, ModelError> {
    build_basic_mbs(&body(), &body(), &joint(mu, k)?, &env())
}

/// Minimal initial data of the two-body system: pose and twist of body 1,
/// joint angle and rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumInit {
    pub q1: GroupElement,
    pub u1: Twist,
    pub theta: f64,
    pub theta_dot: f64,
}

/// Consistent full state of the two-body system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBodyState {
    pub q1: GroupElement,
    pub p1: Wrench,
    pub q2: GroupElement,
    pub p2: Wrench,
    pub q_r: GroupElement,
}

pub fn momentum(b: &BodyParams, u: &Twist) -> Wrench {
    Wrench::new(b.inertia * u.ang, b.m * u.lin)
}

impl PendulumInit {
    pub fn demo() -> Self {
        Self {
            q1: GroupElement::from_parts(
                ephs_geom::so3::exp(&Vec3::new(0.1, -0.2, 0.3)),
                Vec3::new(0.2, -0.1, 1.0),
                SEMI,
            ),
            u1: Twist::new(Vec3::new(0.3, -0.2, 0.5), Vec3::new(0.1, 0.0, 0.2)),
            theta: 0.3,
            theta_dot: 1.0,
        }
    }

    /// `q2 = q1 o1 exp(θB) o2⁻¹`, `u2 = Ad_{P⁻¹}u1 + θ̇ Ad_{o2}B`.
    pub fn state(&self, b1: &BodyParams, b2: &BodyParams, j: &JointParams) -> TwoBodyState {
        let q_r = j.geometry.exp(&Coords::scalar(self.theta));
        let pr = j.o1.then(&q_r).then(&j.o2.inverse());
        let b = j.o2.adjoint(&j.geometry.basis()[0]);
        let u2 = pr.inverse().adjoint(&self.u1) + self.theta_dot * b;
        TwoBodyState { q1: self.q1, p1: momentum(b1, &self.u1), q2: self.q1.then(&pr), p2: momentum(b2, &u2), q_r }
    }
}
