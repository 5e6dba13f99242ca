use ephs_geom::{
    ad, ad_star, cotrivialize, hat, left_trivialize, untrivialize, vee, Convention, GroupElement,
    Mat3, MaterialCotangent, Twist, Vec3, Wrench,
};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn vec3(scale: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-scale..scale).prop_map(|a| Vec3::new(a[0], a[1], a[2]))
}

fn twist(scale: f64) -> impl Strategy<Value = Twist> {
    (vec3(scale), vec3(scale)).prop_map(|(a, l)| Twist::new(a, l))
}

fn wrench(scale: f64) -> impl Strategy<Value = Wrench> {
    (vec3(scale), vec3(scale)).prop_map(|(a, l)| Wrench::new(a, l))
}

fn convention() -> impl Strategy<Value = Convention> {
    prop_oneof![Just(Convention::DirectProduct), Just(Convention::SemidirectProduct)]
}

// Rotation angles stay below 3 so that log is well conditioned.
fn element(conv: Convention) -> impl Strategy<Value = GroupElement> {
    (vec3(1.7), vec3(2.0)).prop_map(move |(w, r)| {
        let w = if w.norm() > 3.0 { w * (3.0 / w.norm()) } else { w };
        GroupElement::from_parts(ephs_geom::so3::exp(&w), r, conv)
    })
}

fn triple() -> impl Strategy<Value = (GroupElement, GroupElement, GroupElement)> {
    convention().prop_flat_map(|c| (element(c), element(c), element(c)))
}

fn any_element() -> impl Strategy<Value = GroupElement> {
    convention().prop_flat_map(element)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 1000, ..ProptestConfig::default() }
}

fn twist_close(a: &Twist, b: &Twist, tol: f64) -> bool {
    (*a - *b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn wrench_close(a: &Wrench, b: &Wrench, tol: f64) -> bool {
    (*a - *b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn pose_close(a: &GroupElement, b: &GroupElement, tol: f64) -> bool {
    a.convention == b.convention && a.max_abs_diff(b) <= tol
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn hat_vee_roundtrip(v in vec3(10.0), w in vec3(10.0)) {
        prop_assert_eq!(vee(&hat(&v)).unwrap(), v);
        prop_assert!((hat(&v) * w - v.cross(&w)).norm() <= TOL * (1.0 + v.norm() * w.norm()));
    }

    #[test]
    fn group_axioms((a, b, c) in triple()) {
        let conv = a.convention;
        let e = GroupElement::identity(conv);
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert!(pose_close(&left, &right, TOL));
        prop_assert!(pose_close(&a.compose(&e).unwrap(), &a, TOL));
        prop_assert!(pose_close(&e.compose(&a).unwrap(), &a, TOL));
        prop_assert!(pose_close(&a.compose(&a.inverse()).unwrap(), &e, TOL));
        prop_assert!(pose_close(&a.inverse().compose(&a).unwrap(), &e, TOL));
        prop_assert!(pose_close(&a.inverse().inverse(), &a, TOL));
        prop_assert!(a.compose(&b).unwrap().check().is_ok());
    }

    #[test]
    fn adjoint_is_a_homomorphism((a, b, _) in triple(), u in twist(3.0), f in wrench(3.0)) {
        let conv = a.convention;
        let ab = a.compose(&b).unwrap();
        prop_assert!(twist_close(&ab.adjoint(&u), &a.adjoint(&b.adjoint(&u)), TOL));
        // Ad* is a right action: Ad*_{ab} = Ad*_b Ad*_a.
        prop_assert!(wrench_close(&ab.coadjoint(&f), &b.coadjoint(&a.coadjoint(&f)), TOL));
        let e = GroupElement::identity(conv);
        prop_assert_eq!(e.adjoint(&u), u);
        prop_assert_eq!(e.coadjoint(&f), f);
    }

    #[test]
    fn coadjoint_is_dual_to_adjoint(q in any_element(), u in twist(3.0), f in wrench(3.0)) {
        let lhs = q.coadjoint(&f).pair(&u);
        let rhs = f.pair(&q.adjoint(&u));
        prop_assert!((lhs - rhs).abs() <= TOL * (1.0 + f.norm() * u.norm()));
    }

    #[test]
    fn ad_star_is_dual_to_ad(conv in convention(), u in twist(3.0), w in twist(3.0), p in wrench(3.0)) {
        let lhs = ad_star(conv, &u, &p).pair(&w);
        let rhs = p.pair(&ad(conv, &u, &w));
        prop_assert!((lhs - rhs).abs() <= TOL * (1.0 + p.norm() * u.norm() * w.norm()));
    }

    #[test]
    fn bracket_antisymmetry_and_jacobi(conv in convention(), a in twist(3.0), b in twist(3.0), c in twist(3.0)) {
        prop_assert!(twist_close(&ad(conv, &a, &b), &(-ad(conv, &b, &a)), TOL));
        let j = ad(conv, &a, &ad(conv, &b, &c)) + ad(conv, &b, &ad(conv, &c, &a)) + ad(conv, &c, &ad(conv, &a, &b));
        prop_assert!(j.norm() <= TOL * (1.0 + a.norm() * b.norm() * c.norm()));
    }

    #[test]
    fn exp_log_roundtrip(conv in convention(), w in vec3(1.8), v in vec3(3.0)) {
        let w = if w.norm() > std::f64::consts::PI - 0.1 { w * ((std::f64::consts::PI - 0.1) / w.norm()) } else { w };
        let xi = Twist::new(w, v);
        let q = GroupElement::exp(&xi, conv);
        prop_assert!(q.orthogonality_error() <= TOL);
        prop_assert!((q.rot.determinant() - 1.0).abs() <= TOL);
        let back = q.log().unwrap();
        prop_assert!(twist_close(&back, &xi, TOL));
        prop_assert!(pose_close(&GroupElement::exp(&back, conv), &q, TOL));
    }

    #[test]
    fn exp_is_one_parameter_subgroup(conv in convention(), xi in twist(1.0), s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let a = GroupElement::exp(&(s * xi), conv);
        let b = GroupElement::exp(&(t * xi), conv);
        let ab = GroupElement::exp(&((s + t) * xi), conv);
        prop_assert!(pose_close(&a.compose(&b).unwrap(), &ab, TOL));
    }

    #[test]
    fn trivialization_roundtrip(q in any_element(), u in twist(5.0)) {
        let v = untrivialize(&q, &u);
        let back = left_trivialize(&q, &v).unwrap();
        prop_assert!(twist_close(&back, &u, TOL));
    }

    #[test]
    fn cotrivialize_preserves_power(q in any_element(), u in twist(3.0), entries in prop::array::uniform9(-3.0f64..3.0), fr in vec3(3.0)) {
        let f = MaterialCotangent::new(Mat3::from_row_slice(&entries), fr);
        let lhs = cotrivialize(&q, &f).pair(&u);
        let rhs = f.pair(&untrivialize(&q, &u));
        prop_assert!((lhs - rhs).abs() <= TOL * (1.0 + u.norm() * (f.f_rot.norm() + fr.norm())));
    }
}
