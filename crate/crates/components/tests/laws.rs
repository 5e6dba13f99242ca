use ephs_components::{
    laws, BodyParams, Component, Coords, JointGeometry, PkcSpace, PortVars, Potential, Value,
};
use ephs_core::JointKind;
use ephs_geom::{so3, untrivialize, Convention, GroupElement, Mat3, MaterialCotangent, Twist, Vec3, Wrench};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const SEMI: Convention = Convention::SemidirectProduct;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 1000, ..ProptestConfig::default() }
}

fn vec3(s: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-s..s).prop_map(Vec3::from)
}

fn twist(s: f64) -> impl Strategy<Value = Twist> {
    (vec3(s), vec3(s)).prop_map(|(a, b)| Twist::new(a, b))
}

fn wrench(s: f64) -> impl Strategy<Value = Wrench> {
    (vec3(s), vec3(s)).prop_map(|(a, b)| Wrench::new(a, b))
}

fn pose() -> impl Strategy<Value = GroupElement> {
    (vec3(1.5), vec3(2.0)).prop_map(|(w, r)| GroupElement::from_parts(so3::exp(&w), r, SEMI))
}

fn kind() -> impl Strategy<Value = JointKind> {
    prop::sample::select(JointKind::ALL.to_vec())
}

fn joint() -> impl Strategy<Value = JointGeometry> {
    (kind(), vec3(1.0), -0.5f64..0.5).prop_filter_map("degenerate axis", |(k, a, pitch)| {
        (a.norm() > 0.1).then(|| JointGeometry::new(k, a.normalize(), pitch).unwrap())
    })
}

fn coords(k: usize, s: f64) -> impl Strategy<Value = Coords> {
    prop::collection::vec(-s..s, k).prop_map(|v| Coords::from_slice(&v))
}

fn spd(k: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, k * k).prop_map(move |v| {
        let a = DMatrix::from_vec(k, k, v);
        &a * a.transpose()
    })
}

fn vec_val(c: Coords) -> Value {
    Value::Vector(c)
}

fn six(t: &[f64; 6]) -> Value {
    Value::Vector(Coords::from_slice(t))
}

fn io(efforts: &[(&str, Value)], flows: &[(&str, Value)], states: &[(&str, Value)]) -> PortVars {
    PortVars {
        effort: efforts.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        flow: flows.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        state: states.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        ..PortVars::default()
    }
}

const POWER_TOL: f64 = 1e-12;

proptest! {
    #![proptest_config(config())]

    #[test]
    fn scalar_and_joint_couplings_conserve_power(k in kind(), qe in coords(3, 3.0), pe in coords(3, 3.0)) {
        let n = k.dim();
        let qe = Coords::from_slice(&qe.as_slice()[..n]);
        let pe = Coords::from_slice(&pe.as_slice()[..n]);
        let out = Component::Pkc(PkcSpace::Joint(k))
            .dirac_eval(&io(&[("q_r", vec_val(qe)), ("p_r", vec_val(pe))], &[], &[]))
            .unwrap();
        prop_assert!(out.power().abs() <= POWER_TOL);
        let q1 = Coords::from_slice(&qe.as_slice()[..1]);
        let p1 = Coords::from_slice(&pe.as_slice()[..1]);
        let out = Component::Pkc(PkcSpace::Scalar)
            .dirac_eval(&io(&[("q", vec_val(q1)), ("p", vec_val(p1))], &[], &[]))
            .unwrap();
        prop_assert!(out.power().abs() <= POWER_TOL);
    }

    #[test]
    fn body_coupling_conserves_power(q in pose(), entries in prop::array::uniform9(-3.0f64..3.0), fr in vec3(3.0), u in twist(3.0)) {
        let qe = MaterialCotangent::new(Mat3::from_row_slice(&entries), fr);
        let out = Component::Pkc(PkcSpace::Body)
            .dirac_eval(&io(&[("q", Value::Cotangent(qe)), ("p", six(&u.to_array()))], &[], &[("q", Value::Pose(q))]))
            .unwrap();
        prop_assert!(out.power().abs() <= POWER_TOL);
    }

    #[test]
    fn lie_poisson_conserves_power(p in wrench(3.0), u in twist(3.0)) {
        let out = Component::LiePoisson
            .dirac_eval(&io(&[("p", six(&u.to_array()))], &[], &[("p", six(&p.to_array()))]))
            .unwrap();
        prop_assert!(out.power().abs() <= POWER_TOL);
    }

    #[test]
    fn offset_conserves_power(o in pose(), e in twist(3.0), f in wrench(3.0), side in 1u8..=2) {
        let (pn, jn) = (format!("p{side}"), format!("pj{side}"));
        let out = Component::offset(o, side)
            .unwrap()
            .dirac_eval(&io(&[(&pn, six(&e.to_array()))], &[(&jn, six(&f.to_array()))], &[]))
            .unwrap();
        prop_assert!(out.power().abs() <= POWER_TOL);
    }

    #[test]
    fn constraint_conserves_power_with_multiplier(
        j in joint(), c in coords(3, 2.0), e1 in twist(3.0), e2 in twist(3.0), er in coords(3, 3.0), l in wrench(3.0)
    ) {
        let n = j.dim();
        let q = j.exp(&Coords::from_slice(&c.as_slice()[..n]));
        let er = Coords::from_slice(&er.as_slice()[..n]);
        let mut vars = io(
            &[("pj1", six(&e1.to_array())), ("pj2", six(&e2.to_array())), ("p_r", vec_val(er))],
            &[],
            &[("q_r", Value::Pose(q))],
        );
        vars.multiplier = Some(Coords::from_wrench(&l));
        let out = Component::Constraint { joint: j }.dirac_eval(&vars).unwrap();
        prop_assert!(out.power().abs() <= POWER_TOL);
    }

    #[test]
    fn constraint_vanishes_at_consistent_kinematics(
        j in joint(), o1 in pose(), u1 in twist(3.0), c in coords(3, 2.0), ur in coords(3, 3.0)
    ) {
        let n = j.dim();
        let qr = j.exp(&Coords::from_slice(&c.as_slice()[..n]));
        let ur = Coords::from_slice(&ur.as_slice()[..n]);
        let uj1 = laws::offset_effort(&o1, &u1);
        let uj2 = qr.inverse().adjoint(&uj1) + j.include(&ur);
        let r = laws::constraint_residual(&j, &qr, &uj1, &uj2, &ur);
        prop_assert!(r.norm() <= 1e-12);
    }

    #[test]
    fn friction_destroys_no_negative_exergy(
        k in 1usize..=3, m in spd(3), u in coords(3, 3.0), theta0 in 1.0f64..1000.0, se in -0.9f64..5.0
    ) {
        let mu = m.view((0, 0), (k, k)).into_owned();
        let u = Coords::from_slice(&u.as_slice()[..k]);
        let s_e = se * theta0;
        let theta = theta0 + s_e;
        let (pf, sf) = laws::friction(&mu, theta0, &u, s_e).unwrap();
        let power = u.dot(&pf) + s_e * sf;
        let v = DVector::from_column_slice(u.as_slice());
        let destruction = theta0 * v.dot(&(&mu * &v)) / theta;
        prop_assert!(power >= -1e-14);
        prop_assert!((power - destruction).abs() <= 1e-12 * (1.0 + destruction));
        let mut x = u.as_slice().to_vec();
        x.push(theta);
        let null = laws::onsager_matrix(&mu, theta0, &u, theta) * DVector::from_vec(x);
        prop_assert!(null.norm() <= 1e-12 * (1.0 + destruction));
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-3)
}

const FD: f64 = 1e-6;

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn vector_storage_effort_is_gradient(k in 0.1f64..10.0, m in 0.1f64..10.0, x in -3.0f64..3.0, p in wrench(3.0), d in prop::array::uniform3(0.5f64..3.0)) {
        for (c, dim, x) in [
            (Component::spring(k).unwrap(), 1, vec![x]),
            (Component::mass(m).unwrap(), 1, vec![x]),
            (Component::Kinetic { m, inertia: Mat3::from_diagonal(&Vec3::from(d)) }, 6, p.to_array().to_vec()),
        ] {
            let e = c.storage_effort(&vec_val(Coords::from_slice(&x))).unwrap().vector();
            for i in 0..dim {
                let mut a = x.clone();
                let mut b = x.clone();
                a[i] += FD;
                b[i] -= FD;
                let fd = (c.storage_energy(&vec_val(Coords::from_slice(&a))).unwrap()
                    - c.storage_energy(&vec_val(Coords::from_slice(&b))).unwrap()) / (2.0 * FD);
                prop_assert!(rel_close(e.as_slice()[i], fd, 1e-6), "{} {i}: {} vs {fd}", c.name(), e.as_slice()[i]);
            }
        }
    }

    #[test]
    fn gravity_effort_is_directional_derivative(q in pose(), m in 0.1f64..10.0, g in vec3(10.0), eta in twist(1.0)) {
        let c = Component::gravity(&BodyParams { m, inertia: Mat3::identity(), g }).unwrap();
        let e = c.storage_effort(&Value::Pose(q)).unwrap().cotangent();
        let energy = |t: f64| c.storage_energy(&Value::Pose(q.then(&GroupElement::exp(&(t * eta), SEMI)))).unwrap();
        let fd = (energy(FD) - energy(-FD)) / (2.0 * FD);
        let exact = e.pair(&untrivialize(&q, &eta));
        prop_assert!(rel_close(exact, fd, 1e-6), "{exact} vs {fd}");
    }

    #[test]
    fn joint_potential_effort_is_trivialized_gradient(j in joint(), c in coords(3, 1.5), dir in coords(3, 1.0), s in spd(3)) {
        let n = j.dim();
        let k = s.view((0, 0), (n, n)).into_owned() + DMatrix::identity(n, n);
        let q = j.exp(&Coords::from_slice(&c.as_slice()[..n]));
        let dir = Coords::from_slice(&dir.as_slice()[..n]);
        let comp = Component::JointPotential { joint: j.clone(), potential: Potential::QuadraticLog(k) };
        let e = comp.storage_effort(&Value::Pose(q)).unwrap().vector();
        let energy = |t: f64| comp.storage_energy(&Value::Pose(q.then(&j.exp(&dir.scale(t))))).unwrap();
        let fd = (energy(FD) - energy(-FD)) / (2.0 * FD);
        prop_assert!(rel_close(e.dot(&dir), fd, 1e-6), "{:?}: {} vs {fd}", j.kind, e.dot(&dir));
    }
}
