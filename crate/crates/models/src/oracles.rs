//! Reference solutions independent of the assembled equations.

use ephs_components::{BodyParams, Coords, JointParams, Potential};
use ephs_geom::{ad, ad_star, so3, Convention, GroupElement, Mat3, Twist, Vec3, Wrench};
use nalgebra::{SMatrix, SVector};

use crate::demo::PendulumInit;
use crate::ModelError;

const SEMI: Convention = Convention::SemidirectProduct;

/// Closed-form underdamped oscillator `m q̈ + d q̇ + k q = 0`, returning
/// `(q, p, s)` with `s = (E(0) − E(t))/θ0`.
#[allow(clippy::too_many_arguments)]
pub fn oracle_damped_oscillator(
    t: f64,
    m: f64,
    k: f64,
    d: f64,
    q0: f64,
    p0: f64,
    theta0: f64,
) -> Result<(f64, f64, f64), ModelError> {
    if d * d >= 4.0 * m * k {
        return Err(ModelError::Overdamped);
    }
    let gamma = d / (2.0 * m);
    let w = (k / m - gamma * gamma).sqrt();
    let v0 = p0 / m;
    let a = (v0 + gamma * q0) / w;
    let (sn, cs) = (w * t).sin_cos();
    let decay = (-gamma * t).exp();
    let q = decay * (q0 * cs + a * sn);
    let v = decay * (-gamma * (q0 * cs + a * sn) + w * (a * cs - q0 * sn));
    let p = m * v;
    let energy = |q: f64, p: f64| 0.5 * k * q * q + 0.5 * p * p / m;
    Ok((q, p, (energy(q0, p0) - energy(q, p)) / theta0))
}

fn rk4<const N: usize>(y: &mut SVector<f64, N>, h: f64, f: impl Fn(&SVector<f64, N>) -> SVector<f64, N>) {
    let k1 = f(y);
    let k2 = f(&(*y + 0.5 * h * k1));
    let k3 = f(&(*y + 0.5 * h * k2));
    let k4 = f(&(*y + h * k3));
    *y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

fn steps(t: f64, h: f64) -> (usize, f64) {
    let n = (t / h).round().max(1.0) as usize;
    (n, t / n as f64)
}

/// Damped oscillator integrated by the classical Runge-Kutta method.
pub fn rk4_damped_oscillator(t: f64, m: f64, k: f64, d: f64, q0: f64, p0: f64, h: f64) -> (f64, f64) {
    let (n, h) = steps(t, h);
    let mut y = SVector::<f64, 2>::new(q0, p0);
    for _ in 0..n {
        rk4(&mut y, h, |y| SVector::<f64, 2>::new(y[1] / m, -k * y[0] - d * y[1] / m));
    }
    (y[0], y[1])
}

fn pack_pose(y: &mut [f64], q: &GroupElement) {
    y[..9].copy_from_slice(q.rot.as_slice());
    y[9..12].copy_from_slice(q.trans.as_slice());
}

fn unpack_pose(y: &[f64]) -> (Mat3, Vec3) {
    (Mat3::from_column_slice(&y[..9]), Vec3::from_column_slice(&y[9..12]))
}

fn twist_of(y: &[f64]) -> Twist {
    Twist::from_slice(&y[..6])
}

fn body_velocity(b: &BodyParams, p: &Wrench) -> Twist {
    Twist::new(b.inertia.try_inverse().expect("positive inertia") * p.ang, p.lin / b.m)
}

fn gravity_wrench(b: &BodyParams, rot: &Mat3) -> Wrench {
    Wrench::new(Vec3::zeros(), -(rot.transpose() * (b.m * b.g)))
}

/// Rigid body state with the rotation integrated in the ambient matrix space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeBodyState {
    pub rot: Mat3,
    pub trans: Vec3,
    pub p: Wrench,
}

impl FreeBodyState {
    /// Angular momentum about the origin in the spatial frame, `R p_ω + r × R p_υ`.
    pub fn spatial_angular_momentum(&self) -> Vec3 {
        self.rot * self.p.ang + self.trans.cross(&(self.rot * self.p.lin))
    }
}

/// Single body under `ṗ = ad*_u(p) − (0, Rᵀ m g)`, `Ṙ = R ω̂`, `ṙ = R υ`.
pub fn free_body_reference(params: &BodyParams, q0: &GroupElement, p0: &Wrench, t: f64, h: f64) -> FreeBodyState {
    let (n, h) = steps(t, h);
    let mut y = SVector::<f64, 18>::zeros();
    pack_pose(y.as_mut_slice(), q0);
    y.as_mut_slice()[12..].copy_from_slice(&p0.to_array());
    let f = |y: &SVector<f64, 18>| {
        let (rot, _) = unpack_pose(&y.as_slice()[..12]);
        let p = Wrench::from_slice(&y.as_slice()[12..]);
        let u = body_velocity(params, &p);
        let mut d = SVector::<f64, 18>::zeros();
        let dr = rot * so3::hat(&u.ang);
        d.as_mut_slice()[..9].copy_from_slice(dr.as_slice());
        d.as_mut_slice()[9..12].copy_from_slice((rot * u.lin).as_slice());
        let dp = ad_star(SEMI, &u, &p) + gravity_wrench(params, &rot);
        d.as_mut_slice()[12..].copy_from_slice(&dp.to_array());
        d
    };
    for _ in 0..n {
        rk4(&mut y, h, f);
    }
    let (rot, trans) = unpack_pose(&y.as_slice()[..12]);
    FreeBodyState { rot, trans, p: Wrench::from_slice(&y.as_slice()[12..]) }
}

/// State of the two-body system in minimal coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumState {
    pub rot1: Mat3,
    pub trans1: Vec3,
    pub u1: Twist,
    pub theta: f64,
    pub theta_dot: f64,
    /// Entropy delivered to the environment.
    pub s: f64,
}

impl PendulumState {
    /// Relative pose `P = o1 exp(θB) o2⁻¹` of body 2 seen from body 1.
    pub fn relative(&self, j: &JointParams) -> GroupElement {
        j.o1.then(&j.geometry.exp(&Coords::scalar(self.theta))).then(&j.o2.inverse())
    }

    pub fn q1(&self) -> GroupElement {
        GroupElement::from_parts(self.rot1, self.trans1, SEMI)
    }

    pub fn q2(&self, j: &JointParams) -> GroupElement {
        self.q1().then(&self.relative(j))
    }

    pub fn u2(&self, j: &JointParams) -> Twist {
        let b = j.o2.adjoint(&j.geometry.basis()[0]);
        self.relative(j).inverse().adjoint(&self.u1) + self.theta_dot * b
    }
}

fn stiffness(j: &JointParams) -> f64 {
    match &j.potential {
        Potential::Zero => 0.0,
        Potential::QuadraticLog(k) => k[(0, 0)],
    }
}

fn mass_matrix(b: &BodyParams) -> SMatrix<f64, 6, 6> {
    let mut m = SMatrix::<f64, 6, 6>::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&b.inertia);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Mat3::identity() * b.m));
    m
}

/// Two free bodies joined by a one-degree-of-freedom joint, integrated in the
/// coordinates `(q1, u1, θ, θ̇)` by the classical Runge-Kutta method. With
/// `u = G v`, `v = (u1, θ̇)`, the reduced equations are
/// `GᵀMG v̇ = Gᵀ(ad*_u(Mu) + F − M Ġv) + (0, −Kθ − μθ̇)`.
pub fn oracle_minimal_pendulum(
    b1: &BodyParams,
    b2: &BodyParams,
    j: &JointParams,
    init: &PendulumInit,
    theta0: f64,
    t: f64,
    h: f64,
) -> PendulumState {
    assert_eq!(j.geometry.dim(), 1, "minimal oracle covers one-dimensional joints");
    let (n, h) = steps(t, h);
    let (m1, m2) = (mass_matrix(b1), mass_matrix(b2));
    let k = stiffness(j);
    let mu = j.mu[(0, 0)];
    let bvec = j.o2.adjoint(&j.geometry.basis()[0]).to_vec6();
    let bt = Twist::from_vec6(&bvec);

    let f = |y: &SVector<f64, 21>| {
        let ys = y.as_slice();
        let (rot1, _) = unpack_pose(&ys[..12]);
        let u1 = twist_of(&ys[12..18]);
        let (theta, theta_dot) = (ys[18], ys[19]);
        let st = PendulumState { rot1, trans1: Vec3::zeros(), u1, theta, theta_dot, s: 0.0 };
        let pr = st.relative(j);
        let a = pr.inverse().adjoint_matrix();
        let w = pr.inverse().adjoint(&u1);
        let u2 = w + theta_dot * bt;
        let rot2 = rot1 * pr.rot;

        let f1 = ad_star(SEMI, &u1, &Wrench::from_vec6(&(m1 * u1.to_vec6()))) + gravity_wrench(b1, &rot1);
        let gdot = -theta_dot * ad(SEMI, &bt, &w);
        let f2 = ad_star(SEMI, &u2, &Wrench::from_vec6(&(m2 * u2.to_vec6()))) + gravity_wrench(b2, &rot2);
        let f2 = f2.to_vec6() - m2 * gdot.to_vec6();

        let mut lhs = SMatrix::<f64, 7, 7>::zeros();
        lhs.fixed_view_mut::<6, 6>(0, 0).copy_from(&(m1 + a.transpose() * m2 * a));
        let c = a.transpose() * m2 * bvec;
        lhs.fixed_view_mut::<6, 1>(0, 6).copy_from(&c);
        lhs.fixed_view_mut::<1, 6>(6, 0).copy_from(&c.transpose());
        lhs[(6, 6)] = bvec.dot(&(m2 * bvec));
        let mut rhs = SVector::<f64, 7>::zeros();
        rhs.fixed_rows_mut::<6>(0).copy_from(&(f1.to_vec6() + a.transpose() * f2));
        rhs[6] = bvec.dot(&f2) - k * theta - mu * theta_dot;
        let vdot = lhs.lu().solve(&rhs).expect("positive definite reduced mass");

        let mut d = SVector::<f64, 21>::zeros();
        let ds = d.as_mut_slice();
        ds[..9].copy_from_slice((rot1 * so3::hat(&u1.ang)).as_slice());
        ds[9..12].copy_from_slice((rot1 * u1.lin).as_slice());
        ds[12..18].copy_from_slice(&vdot.as_slice()[..6]);
        ds[18] = theta_dot;
        ds[19] = vdot[6];
        ds[20] = mu * theta_dot * theta_dot / theta0;
        d
    };

    let mut y = SVector::<f64, 21>::zeros();
    {
        let ys = y.as_mut_slice();
        pack_pose(ys, &init.q1);
        ys[12..18].copy_from_slice(&init.u1.to_array());
        ys[18] = init.theta;
        ys[19] = init.theta_dot;
    }
    for _ in 0..n {
        rk4(&mut y, h, f);
    }
    let ys = y.as_slice();
    let (rot1, trans1) = unpack_pose(&ys[..12]);
    PendulumState { rot1, trans1, u1: twist_of(&ys[12..18]), theta: ys[18], theta_dot: ys[19], s: ys[20] }
}

/// Total energy of the two-body system, including `θ0 s`.
pub fn pendulum_energy(b1: &BodyParams, b2: &BodyParams, j: &JointParams, st: &PendulumState, theta0: f64) -> f64 {
    let kin = |b: &BodyParams, u: &Twist| 0.5 * u.to_vec6().dot(&(mass_matrix(b) * u.to_vec6()));
    let u2 = st.u2(j);
    let q2 = st.q2(j);
    kin(b1, &st.u1) + kin(b2, &u2) + b1.m * b1.g.dot(&st.trans1) + b2.m * b2.g.dot(&q2.trans)
        + 0.5 * stiffness(j) * st.theta * st.theta
        + theta0 * st.s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;

    #[test]
    fn damped_oracle_initial_values_and_undamped_limit() {
        let (q, p, s) = oracle_damped_oscillator(0.0, 1.0, 1.0, 0.1, 1.0, 0.0, 300.0).unwrap();
        assert_eq!((q, p, s), (1.0, 0.0, 0.0));
        let (q, _, s) = oracle_damped_oscillator(2.0, 1.0, 4.0, 0.0, 1.0, 0.0, 300.0).unwrap();
        assert!((q - (4.0f64).cos()).abs() < 1e-15);
        assert!(s.abs() < 1e-15);
        assert_eq!(oracle_damped_oscillator(1.0, 1.0, 1.0, 2.0, 1.0, 0.0, 300.0), Err(ModelError::Overdamped));
    }

    #[test]
    fn damped_oracle_matches_runge_kutta() {
        let (q, p, _) = oracle_damped_oscillator(1.0, 1.0, 1.0, 0.1, 1.0, 0.0, 300.0).unwrap();
        let (qr, pr) = rk4_damped_oscillator(1.0, 1.0, 1.0, 0.1, 1.0, 0.0, 1e-5);
        assert!((q - qr).abs() < 1e-12 && (p - pr).abs() < 1e-12, "{q} {qr} {p} {pr}");
    }

    #[test]
    fn free_body_conserves_spatial_momentum_and_energy() {
        let mut b = demo::body();
        b.g = Vec3::zeros();
        let q0 = GroupElement::from_translation(Vec3::new(1.0, 0.0, 0.0), SEMI);
        let p0 = Wrench::new(Vec3::new(1.0, 0.02, 0.0), Vec3::new(0.0, 0.5, 0.0));
        let st = free_body_reference(&b, &q0, &p0, 2.0, 1e-3);
        let init = FreeBodyState { rot: q0.rot, trans: q0.trans, p: p0 };
        assert!((st.spatial_angular_momentum() - init.spatial_angular_momentum()).norm() < 1e-10);
        let e = |p: &Wrench| 0.5 * p.ang.dot(&(b.inertia.try_inverse().unwrap() * p.ang)) + 0.5 * p.lin.norm_squared();
        assert!((e(&st.p) - e(&p0)).abs() < 1e-10);
    }

    #[test]
    fn pendulum_oracle_balances_energy() {
        let (b, j) = (demo::body(), demo::joint(0.2, 3.0).unwrap());
        let init = demo::PendulumInit::demo();
        let st0 = oracle_minimal_pendulum(&b, &b, &j, &init, 300.0, 0.0, 1e-3);
        let st = oracle_minimal_pendulum(&b, &b, &j, &init, 300.0, 1.0, 1e-3);
        let (e0, e1) = (pendulum_energy(&b, &b, &j, &st0, 300.0), pendulum_energy(&b, &b, &j, &st, 300.0));
        assert!((e0 - e1).abs() < 1e-9 * e0.abs().max(1.0), "{e0} {e1}");
        assert!(st.s > 0.0);
    }

    #[test]
    fn rigid_joint_in_zero_gravity_keeps_total_momentum() {
        // Without gravity the total spatial momentum of both bodies is conserved.
        let mut b = demo::body();
        b.g = Vec3::zeros();
        let j = demo::joint(0.0, 2.0).unwrap();
        let init = demo::PendulumInit::demo();
        let spatial = |st: &PendulumState| {
            let mut total = Wrench::zero();
            for (q, u) in [(st.q1(), st.u1), (st.q2(&j), st.u2(&j))] {
                let p = Wrench::new(b.inertia * u.ang, b.m * u.lin);
                total = total + q.inverse().coadjoint(&p);
            }
            total
        };
        let st0 = oracle_minimal_pendulum(&b, &b, &j, &init, 300.0, 0.0, 1e-3);
        let st = oracle_minimal_pendulum(&b, &b, &j, &init, 300.0, 1.5, 1e-3);
        assert!((spatial(&st) - spatial(&st0)).norm() < 1e-9);
    }
}
