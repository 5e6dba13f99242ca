//! Acceptance run: each criterion prints one PASS/FAIL line; the process exits
//! non-zero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ephs_assemble::{assemble, AssembleOptions, DaeSystem, SlotKind};
use ephs_components::{
    laws, BodyParams, Component, Coords, FrictionSpace, JointGeometry, PkcSpace, PortVars, Potential, Value,
};
use ephs_core::{flatten, Binding, Filling, JointKind};
use ephs_geom::{
    ad, ad_star, so3, untrivialize, Convention, GroupElement, Mat3, MaterialCotangent, Twist, Vec3, Wrench,
};
use ephs_lang::{lex, load, lower, parse, parse_file, serialize, Tok};
use ephs_models::*;
use ephs_sim::{simulate, IntegratorConfig, Method, SystemState};
use nalgebra::{DMatrix, DVector};

const SEMI: Convention = Convention::SemidirectProduct;
const CASES: usize = 1000;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn system(model: &Model) -> DaeSystem {
    let (p, b) = flatten(&model.0, &model.1).unwrap();
    assemble(&p, &b, AssembleOptions::default()).unwrap()
}

struct Gen(fastrand::Rng);

impl Gen {
    fn new(seed: u64) -> Self {
        Self(fastrand::Rng::with_seed(seed))
    }

    fn f(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.f64()
    }

    fn vec3(&mut self, s: f64) -> Vec3 {
        Vec3::new(self.f(-s, s), self.f(-s, s), self.f(-s, s))
    }

    fn twist(&mut self, s: f64) -> Twist {
        Twist::new(self.vec3(s), self.vec3(s))
    }

    fn wrench(&mut self, s: f64) -> Wrench {
        Wrench::new(self.vec3(s), self.vec3(s))
    }

    fn list(&mut self, n: usize, s: f64) -> Vec<f64> {
        (0..n).map(|_| self.f(-s, s)).collect()
    }

    fn coords(&mut self, n: usize, s: f64) -> Coords {
        Coords::from_slice(&self.list(n, s))
    }

    fn conv(&mut self) -> Convention {
        if self.0.bool() {
            SEMI
        } else {
            Convention::DirectProduct
        }
    }

    /// Rotation angle below `max_angle`.
    fn element(&mut self, conv: Convention, max_angle: f64) -> GroupElement {
        let w = self.vec3(max_angle);
        let w = if w.norm() > max_angle { w * (max_angle / w.norm()) } else { w };
        GroupElement::from_parts(so3::exp(&w), self.vec3(2.0), conv)
    }

    fn kind(&mut self) -> JointKind {
        JointKind::ALL[self.0.usize(..JointKind::ALL.len())]
    }

    fn joint(&mut self) -> JointGeometry {
        let kind = self.kind();
        loop {
            let a = self.vec3(1.0);
            if a.norm() > 0.1 {
                return JointGeometry::new(kind, a.normalize(), self.f(-0.5, 0.5)).unwrap();
            }
        }
    }

    fn spd(&mut self, k: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(k, k, |_, _| self.f(-1.0, 1.0));
        &a * a.transpose()
    }
}

/// Worst value seen, scaled by `1 + scale`.
#[derive(Default)]
struct Worst(f64);

impl Worst {
    fn see(&mut self, err: f64, scale: f64) {
        self.0 = self.0.max(err / (1.0 + scale));
    }
}

fn geometry() -> Outcome {
    const TOL: f64 = 1e-12;
    let start = Instant::now();
    let mut g = Gen::new(1);
    let mut worst = Worst::default();
    for _ in 0..CASES {
        let conv = g.conv();
        let (a, b, c) = (g.element(conv, 3.0), g.element(conv, 3.0), g.element(conv, 3.0));
        let e = GroupElement::identity(conv);
        let ab = a.compose(&b).unwrap();
        let pose = |x: &GroupElement, y: &GroupElement| x.max_abs_diff(y);
        worst.see(pose(&ab.compose(&c).unwrap(), &a.compose(&b.compose(&c).unwrap()).unwrap()), 0.0);
        worst.see(pose(&a.compose(&e).unwrap(), &a), 0.0);
        worst.see(pose(&e.compose(&a).unwrap(), &a), 0.0);
        worst.see(pose(&a.compose(&a.inverse()).unwrap(), &e), 0.0);
        worst.see(pose(&a.inverse().compose(&a).unwrap(), &e), 0.0);

        let (u, w, v, f) = (g.twist(3.0), g.twist(3.0), g.twist(3.0), g.wrench(3.0));
        let s = u.norm();
        worst.see((ab.adjoint(&u) - a.adjoint(&b.adjoint(&u))).norm(), s);
        worst.see((ab.coadjoint(&f) - b.coadjoint(&a.coadjoint(&f))).norm(), f.norm());
        worst.see((a.coadjoint(&f).pair(&u) - f.pair(&a.adjoint(&u))).abs(), f.norm() * s);
        worst.see((ad_star(conv, &u, &f).pair(&w) - f.pair(&ad(conv, &u, &w))).abs(), f.norm() * s * w.norm());
        worst.see((ad(conv, &u, &w) + ad(conv, &w, &u)).norm(), s * w.norm());
        let jacobi = ad(conv, &u, &ad(conv, &w, &v)) + ad(conv, &w, &ad(conv, &v, &u)) + ad(conv, &v, &ad(conv, &u, &w));
        worst.see(jacobi.norm(), s * w.norm() * v.norm());

        let lim = std::f64::consts::PI - 0.1;
        let rot = g.vec3(1.8);
        let rot = if rot.norm() > lim { rot * (lim / rot.norm()) } else { rot };
        let xi = Twist::new(rot, g.vec3(3.0));
        let q = GroupElement::exp(&xi, conv);
        worst.see(q.orthogonality_error(), 0.0);
        let back = q.log().unwrap();
        worst.see((back - xi).norm(), xi.norm());
        worst.see(pose(&GroupElement::exp(&back, conv), &q), 0.0);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(worst.0 <= TOL, "worst scaled residual {:.2e} > {TOL:e}", worst.0);
    ensure!(secs < 5.0, "took {secs:.2} s");
    Ok(format!("{CASES} cases, worst {:.1e}, {secs:.2} s", worst.0))
}

fn vector(c: Coords) -> Value {
    Value::Vector(c)
}

fn six(x: [f64; 6]) -> Value {
    Value::Vector(Coords::from_slice(&x))
}

fn io(efforts: Vec<(&str, Value)>, states: Vec<(&str, Value)>) -> PortVars {
    PortVars {
        effort: efforts.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        state: states.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        ..PortVars::default()
    }
}

fn dirac_power() -> Outcome {
    let mut g = Gen::new(2);
    let mut worst: f64 = 0.0;
    let mut evals = 0;
    let mut power = |c: &Component, vars: &PortVars| -> Result<(), String> {
        let out = c.dirac_eval(vars).map_err(|e| format!("{}: {e}", c.name()))?;
        worst = worst.max(out.power().abs());
        evals += 1;
        Ok(())
    };
    for _ in 0..CASES {
        let (q, p) = (g.coords(1, 3.0), g.coords(1, 3.0));
        power(&Component::Pkc(PkcSpace::Scalar), &io(vec![("q", vector(q)), ("p", vector(p))], vec![]))?;

        let kind = g.kind();
        let (qe, pe) = (g.coords(kind.dim(), 3.0), g.coords(kind.dim(), 3.0));
        power(&Component::Pkc(PkcSpace::Joint(kind)), &io(vec![("q_r", vector(qe)), ("p_r", vector(pe))], vec![]))?;

        let pose = g.element(SEMI, 2.5);
        let rows = Mat3::from_fn(|_, _| g.f(-3.0, 3.0));
        let qe = MaterialCotangent::new(rows, g.vec3(3.0));
        let u = g.twist(3.0);
        power(
            &Component::Pkc(PkcSpace::Body),
            &io(vec![("q", Value::Cotangent(qe)), ("p", six(u.to_array()))], vec![("q", Value::Pose(pose))]),
        )?;

        let p = g.wrench(3.0);
        power(&Component::LiePoisson, &io(vec![("p", six(u.to_array()))], vec![("p", six(p.to_array()))]))?;

        for side in [1u8, 2] {
            let o = g.element(SEMI, 2.5);
            let mut vars = io(vec![(&format!("p{side}"), six(g.twist(3.0).to_array()))], vec![]);
            vars.flow.insert(format!("pj{side}"), six(g.wrench(3.0).to_array()));
            power(&Component::offset(o, side).unwrap(), &vars)?;
        }

        let j = g.joint();
        let n = j.dim();
        let qr = j.exp(&g.coords(n, 2.0));
        let mut vars = io(
            vec![
                ("pj1", six(g.twist(3.0).to_array())),
                ("pj2", six(g.twist(3.0).to_array())),
                ("p_r", vector(g.coords(n, 3.0))),
            ],
            vec![("q_r", Value::Pose(qr))],
        );
        vars.multiplier = Some(Coords::from_wrench(&g.wrench(3.0)));
        power(&Component::Constraint { joint: j }, &vars)?;
    }
    ensure!(worst <= 1e-12, "max |power| {worst:.2e}");
    Ok(format!("{evals} evaluations over 5 component types, max |power| {worst:.1e}"))
}

fn onsager() -> Outcome {
    let mut g = Gen::new(3);
    let (mut min_destruction, mut worst_identity, mut worst_null) = (f64::INFINITY, 0.0f64, 0.0f64);
    for _ in 0..CASES {
        let space = if g.0.u8(..4) == 0 { FrictionSpace::Scalar } else { FrictionSpace::Joint(g.kind()) };
        let (k, port) = match space {
            FrictionSpace::Scalar => (1, "p"),
            FrictionSpace::Joint(kind) => (kind.dim(), "p_r"),
        };
        let mu = g.spd(k);
        let theta0 = g.f(1.0, 1000.0);
        let s_e = g.f(-0.9, 5.0) * theta0;
        let theta = theta0 + s_e;
        let u = g.coords(k, 3.0);
        let c = Component::Friction { space, mu: mu.clone() };
        let out = c
            .onsager_eval(&io(vec![(port, vector(u.clone())), ("s", vector(Coords::scalar(s_e)))], vec![]), theta0)
            .map_err(|e| e.to_string())?;
        let destruction = out.power();
        let v = DVector::from_column_slice(u.as_slice());
        let expected = theta0 * v.dot(&(&mu * &v)) / theta;
        min_destruction = min_destruction.min(destruction);
        worst_identity = worst_identity.max((destruction - expected).abs() / (1.0 + expected));
        let mut x = u.as_slice().to_vec();
        x.push(theta);
        let null = laws::onsager_matrix(&mu, theta0, &u, theta) * DVector::from_vec(x);
        worst_null = worst_null.max(null.norm() / (1.0 + expected));
    }
    ensure!(min_destruction >= -1e-12, "destruction {min_destruction:.2e} < 0");
    ensure!(worst_identity <= 1e-12, "destruction identity off by {worst_identity:.2e}");
    ensure!(worst_null <= 1e-12, "null vector residual {worst_null:.2e}");
    Ok(format!(
        "{CASES} cases, min destruction {min_destruction:.1e}, identity {worst_identity:.1e}, null vector {worst_null:.1e}"
    ))
}

fn effort_gradient() -> Outcome {
    const FD: f64 = 1e-6;
    const REL: f64 = 1e-6;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-3);
    let mut g = Gen::new(4);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for _ in 0..CASES {
        let p = g.wrench(3.0);
        let d = Vec3::new(g.f(0.5, 3.0), g.f(0.5, 3.0), g.f(0.5, 3.0));
        let x = g.f(-3.0, 3.0);
        for (c, x) in [
            (Component::spring(g.f(0.1, 10.0)).unwrap(), vec![x]),
            (Component::mass(g.f(0.1, 10.0)).unwrap(), vec![x]),
            (Component::Kinetic { m: g.f(0.1, 10.0), inertia: Mat3::from_diagonal(&d) }, p.to_array().to_vec()),
        ] {
            let e = c.storage_effort(&vector(Coords::from_slice(&x))).unwrap().vector();
            for i in 0..x.len() {
                let shifted = |h: f64| {
                    let mut y = x.clone();
                    y[i] += h;
                    c.storage_energy(&vector(Coords::from_slice(&y))).unwrap()
                };
                let fd = (shifted(FD) - shifted(-FD)) / (2.0 * FD);
                worst = worst.max(rel(e.as_slice()[i], fd));
                checks += 1;
            }
        }

        let q = g.element(SEMI, 2.5);
        let body = BodyParams { m: g.f(0.1, 10.0), inertia: Mat3::identity(), g: g.vec3(10.0) };
        let c = Component::gravity(&body).unwrap();
        let eta = g.twist(1.0);
        let e = c.storage_effort(&Value::Pose(q)).unwrap().cotangent();
        let energy = |t: f64| c.storage_energy(&Value::Pose(q.then(&GroupElement::exp(&(t * eta), SEMI)))).unwrap();
        worst = worst.max(rel(e.pair(&untrivialize(&q, &eta)), (energy(FD) - energy(-FD)) / (2.0 * FD)));
        checks += 1;

        let j = g.joint();
        let n = j.dim();
        let k = g.spd(n) + DMatrix::identity(n, n);
        let q = j.exp(&g.coords(n, 1.5));
        let dir = g.coords(n, 1.0);
        let c = Component::JointPotential { joint: j.clone(), potential: Potential::QuadraticLog(k) };
        let e = c.storage_effort(&Value::Pose(q)).unwrap().vector();
        let energy = |t: f64| c.storage_energy(&Value::Pose(q.then(&j.exp(&dir.scale(t))))).unwrap();
        worst = worst.max(rel(e.dot(&dir), (energy(FD) - energy(-FD)) / (2.0 * FD)));
        checks += 1;
    }
    ensure!(worst <= REL, "worst relative error {worst:.2e}");
    Ok(format!("{checks} derivative checks, worst relative error {worst:.1e}"))
}

fn builders() -> Vec<(&'static str, Model)> {
    let (b, j, env) = (demo::body(), demo::joint(0.1, 2.0).unwrap(), demo::env());
    vec![
        ("osc", build_oscillator(1.0, 1.0).unwrap()),
        ("damped_osc", build_damped_oscillator(1.0, 1.0, 0.1, demo::THETA0).unwrap()),
        ("damped_osc_flat", build_damped_oscillator_flat(1.0, 1.0, 0.1, demo::THETA0).unwrap()),
        ("body", build_body(&b).unwrap()),
        ("joint", build_joint(&j, &env).unwrap()),
        ("mbs", build_basic_mbs(&b, &b, &j, &env).unwrap()),
        ("mbs_flat", build_basic_mbs_flat(&b, &b, &j, &env).unwrap()),
    ]
}

fn golden_equations() -> Outcome {
    let damped: &[&str] = &[
        "d/dt osc.q = dE[osc.ke](p)",
        "d/dt p = -μ♭[mf](dE[osc.ke](p)) - dE[osc.pe](osc.q)",
        "d/dt s = μ[mf](dE[osc.ke](p), dE[osc.ke](p))/θ0",
    ];
    let mbs: &[&str] = &[
        "d/dt b1.q = TeL[b1.q](dE[b1.ke](p1))",
        "d/dt b2.q = TeL[b2.q](dE[b2.ke](p2))",
        "d/dt j.q_r = TeL[j.q_r](e[j.p_r])",
        "d/dt j.s = μ[j.mf](e[j.p_r], e[j.p_r])/θ0",
        "d/dt p1 = ad*[dE[b1.ke](p1)](p1) - T*eL[b1.q](dE[b1.pe](b1.q)) - Ad*[j.o1⁻¹](Ad*[I(j.q_r)⁻¹](λ[j.hc]))",
        "d/dt p2 = ad*[dE[b2.ke](p2)](p2) - T*eL[b2.q](dE[b2.pe](b2.q)) + Ad*[j.o2⁻¹](λ[j.hc])",
        "0 = i*(λ[j.hc]) + μ♭[j.mf](e[j.p_r]) + T*eL[j.q_r](dE[j.pe](j.q_r))",
        "0 = Ad[I(j.q_r)⁻¹](Ad[j.o1⁻¹](dE[b1.ke](p1))) - Ad[j.o2⁻¹](dE[b2.ke](p2)) + i(e[j.p_r])",
    ];
    let expected: Vec<(&str, &[&str])> = vec![
        ("osc", &["d/dt p = -dE[pe](q) + p.f", "d/dt q = dE[ke](p)", "p.e = dE[ke](p)"]),
        ("damped_osc", damped),
        ("damped_osc_flat", damped),
        (
            "body",
            &[
                "d/dt p = ad*[dE[ke](p)](p) - T*eL[q](dE[pe](q)) + p.f",
                "d/dt q = TeL[q](dE[ke](p))",
                "p.e = dE[ke](p)",
            ],
        ),
        (
            "joint",
            &[
                "d/dt q_r = TeL[q_r](e[p_r])",
                "d/dt s = μ[mf](e[p_r], e[p_r])/θ0",
                "0 = i*(λ[hc]) + μ♭[mf](e[p_r]) + T*eL[q_r](dE[pe](q_r))",
                "0 = Ad[I(q_r)⁻¹](Ad[o1⁻¹](p1.e)) - Ad[o2⁻¹](p2.e) + i(e[p_r])",
                "p1.f = Ad*[o1⁻¹](Ad*[I(q_r)⁻¹](λ[hc]))",
                "p2.f = -Ad*[o2⁻¹](λ[hc])",
            ],
        ),
        ("mbs", mbs),
        ("mbs_flat", mbs),
    ];
    let models = builders();
    for ((name, model), (ename, lines)) in models.iter().zip(&expected) {
        assert_eq!(name, ename);
        let got = system(model).dump();
        ensure!(got == lines.iter().map(|s| s.to_string()).collect::<Vec<_>>(), "{name}: equations differ:\n{}", got.join("\n"));
        let path = root().join(format!("crates/models/tests/golden/{name}.json"));
        let stored = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let flat = flatten(&model.0, &model.1).unwrap().0;
        ensure!(flat.to_canonical_json() == stored, "{name}: flattened pattern differs from {}", path.display());
    }
    Ok(format!("{} models, equations and flattened patterns match", models.len()))
}

/// A state, rate and algebraic vector drawn uniformly from [-1, 1].
fn point(sys: &DaeSystem, g: &mut Gen) -> (Vec<Value>, Vec<f64>, Vec<f64>) {
    let x = sys
        .layout
        .differential
        .iter()
        .map(|s| match &s.kind {
            SlotKind::Vector => vector(g.coords(s.dim, 1.0)),
            SlotKind::Pose => Value::Pose(GroupElement::exp(&g.twist(1.0), SEMI)),
            SlotKind::Subgroup(k) => Value::Pose(k.exp(&g.coords(k.dim(), 1.0))),
        })
        .collect();
    let xdot = g.list(sys.layout.nx, 1.0);
    let z = g.list(sys.layout.nz, 1.0);
    (x, xdot, z)
}

fn damped_state(sys: &DaeSystem) -> SystemState {
    let mut st = SystemState::zero(&sys.layout);
    st.set_vector(&sys.layout, "osc.q", &[1.0]);
    st
}

fn mbs_state(sys: &DaeSystem, ts: &demo::TwoBodyState) -> SystemState {
    let l = &sys.layout;
    let mut st = SystemState::zero(l);
    st.set_pose(l, "b1.q", ts.q1).set_pose(l, "b2.q", ts.q2).set_pose(l, "j.q_r", ts.q_r);
    st.set_vector(l, "p1", &ts.p1.to_array()).set_vector(l, "p2", &ts.p2.to_array());
    st
}

fn functoriality() -> Outcome {
    let (b, j) = (demo::body(), demo::joint(0.1, 2.0).unwrap());
    let pairs = [
        (
            "damped oscillator",
            system(&build_damped_oscillator(1.0, 1.0, 0.1, 300.0).unwrap()),
            system(&build_damped_oscillator_flat(1.0, 1.0, 0.1, 300.0).unwrap()),
        ),
        (
            "two-body system",
            system(&build_basic_mbs(&b, &b, &j, &demo::env()).unwrap()),
            system(&build_basic_mbs_flat(&b, &b, &j, &demo::env()).unwrap()),
        ),
    ];
    let mut g = Gen::new(6);
    let (mut res, mut traj): (f64, f64) = (0.0, 0.0);
    for (name, nested, flat) in &pairs {
        ensure!(nested.layout == flat.layout, "{name}: layouts differ");
        for _ in 0..100 {
            let (x, xdot, z) = point(nested, &mut g);
            let (a, c) = (nested.residual(&x, &xdot, &z).unwrap(), flat.residual(&x, &xdot, &z).unwrap());
            res = a.iter().zip(&c).map(|(u, v)| (u - v).abs()).fold(res, f64::max);
        }
        let st = if nested.layout.nz == 0 {
            damped_state(nested)
        } else {
            mbs_state(nested, &demo::PendulumInit::demo().state(&b, &b, &j))
        };
        let cfg = IntegratorConfig::new(Method::LieMidpoint, 1e-3, 1.0);
        let (a, c) = (simulate(nested, &st, &cfg).unwrap(), simulate(flat, &st, &cfg).unwrap());
        ensure!(a.len() == c.len() && a.len() == 1001, "{name}: trajectory lengths {} and {}", a.len(), c.len());
        for (x, y) in a.states.iter().zip(&c.states) {
            for (u, v) in x.columns(&nested.layout).iter().zip(y.columns(&flat.layout)) {
                traj = traj.max((u - v).abs());
            }
        }
    }
    ensure!(res <= 1e-15, "residuals differ by {res:.2e}");
    ensure!(traj <= 1e-12, "trajectories differ by {traj:.2e}");
    Ok(format!("residual gap {res:.1e} at 200 points, trajectory gap {traj:.1e}"))
}

fn damped_error(method: Method, h: f64, t_end: f64) -> f64 {
    let sys = system(&build_damped_oscillator(1.0, 1.0, 0.1, 300.0).unwrap());
    let traj = simulate(&sys, &damped_state(&sys), &IntegratorConfig::new(method, h, t_end)).unwrap();
    let mut err: f64 = 0.0;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let (q, _, _) = oracle_damped_oscillator(*t, 1.0, 1.0, 0.1, 1.0, 0.0, 300.0).unwrap();
        err = err.max((s.vector(&sys.layout, "osc.q").as_slice()[0] - q).abs());
    }
    err
}

fn damped_oscillator() -> Outcome {
    let start = Instant::now();
    let err = damped_error(Method::LieMidpoint, 1e-3, 10.0);
    let secs = start.elapsed().as_secs_f64();
    let sys = system(&build_damped_oscillator(1.0, 1.0, 0.1, 300.0).unwrap());
    let traj = simulate(&sys, &damped_state(&sys), &IntegratorConfig::new(Method::LieMidpoint, 1e-3, 10.0)).unwrap();
    let (a, b) = (traj.audit.first().unwrap(), traj.audit.last().unwrap());
    let balance = (sys.theta0 * (b.entropy - a.entropy) + (b.mechanical_energy - a.mechanical_energy)).abs();
    ensure!(err <= 1e-6, "max |q - q_exact| = {err:.2e}");
    ensure!(balance <= 1e-8, "entropy balance off by {balance:.2e}");
    ensure!(secs < 2.0, "took {secs:.2} s");
    Ok(format!("max error {err:.1e}, entropy balance {balance:.1e}, {secs:.2} s"))
}

fn free_body() -> Outcome {
    let mut b = demo::body();
    b.g = Vec3::zeros();
    let sys = system(&build_body(&b).unwrap());
    let l = &sys.layout;
    let mut st = SystemState::zero(l);
    let p0 = demo::momentum(&b, &Twist::new(Vec3::new(1.0, 0.01, 0.0), Vec3::zeros()));
    st.set_vector(l, "p", &p0.to_array());
    let traj = simulate(&sys, &st, &IntegratorConfig::new(Method::LieMidpoint, 1e-3, 10.0)).unwrap();
    ensure!(traj.aborted.is_none() && traj.times.last() == Some(&10.0), "run stopped early: {:?}", traj.aborted);
    let spatial = |s: &SystemState| {
        let q = s.pose(l, "q");
        let p = Wrench::from_slice(s.vector(l, "p").as_slice());
        q.rot * p.ang + q.trans.cross(&(q.rot * p.lin))
    };
    let m0 = spatial(&traj.states[0]);
    let momentum = traj.states.iter().map(|s| (spatial(s) - m0).norm()).fold(0.0, f64::max);
    let energy = traj.summary().energy_drift;
    let i5 = traj.times.iter().position(|t| (*t - 5.0).abs() < 1e-9).unwrap();
    let reference = free_body_reference(&b, &GroupElement::identity(SEMI), &p0, 5.0, 1e-5);
    let s5 = &traj.states[i5];
    let rot = (s5.pose(l, "q").rot - reference.rot).abs().max();
    let mom = (Wrench::from_slice(s5.vector(l, "p").as_slice()) - reference.p).norm();
    ensure!(momentum <= 1e-8, "spatial momentum drift {momentum:.2e}");
    ensure!(energy <= 1e-8, "energy drift {energy:.2e}");
    ensure!(rot <= 1e-6 && mom <= 1e-6, "reference gap at t=5: rotation {rot:.2e}, momentum {mom:.2e}");
    Ok(format!("momentum drift {momentum:.1e}, energy drift {energy:.1e}, gap to reference {:.1e}", rot.max(mom)))
}

fn two_body() -> Outcome {
    let (b, j) = (demo::body(), demo::joint(0.1, 2.0).unwrap());
    let sys = system(&build_basic_mbs(&b, &b, &j, &demo::env()).unwrap());
    let st = mbs_state(&sys, &demo::PendulumInit::demo().state(&b, &b, &j));
    let traj = simulate(&sys, &st, &IntegratorConfig::new(Method::LieMidpoint, 1e-3, 10.0)).unwrap();
    ensure!(traj.aborted.is_none(), "run stopped early: {:?}", traj.aborted);
    let sm = traj.summary();
    let drift = sm.final_drift.unwrap_or(f64::NAN);
    ensure!(sm.energy_drift <= 1e-6, "energy drift {:.2e}", sm.energy_drift);
    ensure!(sm.max_algebraic_residual <= 1e-10, "velocity residual {:.2e}", sm.max_algebraic_residual);
    ensure!(drift <= 1e-4, "position drift {drift:.2e} at t=10");

    let i2 = traj.times.iter().position(|t| (*t - 2.0).abs() < 1e-9).unwrap();
    let oracle = oracle_minimal_pendulum(&b, &b, &j, &demo::PendulumInit::demo(), sys.theta0, 2.0, 1e-5);
    let (l, s2) = (&sys.layout, &traj.states[i2]);
    let theta = j.geometry.coords(&s2.pose(l, "j.q_r")).unwrap().as_slice()[0];
    let gap = s2
        .pose(l, "b1.q")
        .max_abs_diff(&oracle.q1())
        .max(s2.pose(l, "b2.q").max_abs_diff(&oracle.q2(&j)))
        .max((theta - oracle.theta).abs());
    ensure!(gap <= 1e-5, "oracle gap {gap:.2e} at t=2");
    Ok(format!(
        "energy drift {:.1e}, velocity residual {:.1e}, position drift {drift:.1e}, oracle gap {gap:.1e}",
        sm.energy_drift, sm.max_algebraic_residual
    ))
}

fn orders() -> Outcome {
    let mut report = Vec::new();
    for (m, order) in [(Method::LieEuler, 1.0), (Method::LieMidpoint, 2.0)] {
        let e: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|h| damped_error(m, *h, 1.0)).collect();
        let p: Vec<f64> = e.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        ensure!(p.iter().all(|p| (p - order).abs() <= 0.2), "{}: observed orders {p:?}", m.name());
        report.push(format!("{} {:.2}/{:.2}", m.name(), p[0], p[1]));
    }
    Ok(report.join(", "))
}

fn canonical(b: &Binding<Component>) -> Binding<Component> {
    let boxes = b
        .boxes
        .iter()
        .map(|(k, f)| {
            let f = match f {
                Filling::Leaf(c) => Filling::Leaf(c.clone()),
                Filling::Nested { pattern, binding } => Filling::Nested { pattern: pattern.canonical(), binding: canonical(binding) },
            };
            (k.clone(), f)
        })
        .collect();
    Binding { boxes }
}

fn mutate(rng: &mut fastrand::Rng, toks: &mut Vec<String>, pool: &[String]) {
    let n = toks.len();
    let i = rng.usize(..n.max(1));
    match rng.u8(..5) {
        0 if n > 0 => {
            toks.remove(i);
        }
        1 if n > 0 => {
            let t = toks[i].clone();
            toks.insert(i, t);
        }
        2 if n > 1 => toks.swap(i, (i + 1) % n),
        3 if n > 0 => toks[i] = pool[rng.usize(..pool.len())].clone(),
        _ => toks.insert(i.min(n), pool[rng.usize(..pool.len())].clone()),
    }
}

fn parser() -> Outcome {
    let models = root().join("models");
    let mut sources = Vec::new();
    for (name, (bp, bb)) in builders() {
        let path = models.join(format!("{name}.ephs"));
        let m = load(&path).map_err(|e| format!("{name}: {e}"))?;
        let (p, b) = lower(&m, demo::THETA0).map_err(|e| format!("{name}: {e}"))?;
        ensure!(p.canonical() == bp.canonical(), "{name}: pattern differs from the builder");
        ensure!(canonical(&b) == canonical(&bb), "{name}: binding differs from the builder");

        let text = serialize(&parse_file(&path).map_err(|e| format!("{name}: {e}"))?);
        let again = serialize(&parse(&text).map_err(|e| format!("{name}: {e}"))?);
        ensure!(again == text, "{name}: serialization is not byte-stable");
        sources.push(std::fs::read_to_string(&path).unwrap());
    }

    let files: Vec<Vec<String>> = sources
        .iter()
        .map(|src| {
            let (toks, _) = lex(src);
            toks.iter().filter(|t| t.tok != Tok::Eof).map(|t| src[t.span.start..t.span.end].to_string()).collect()
        })
        .collect();
    let mut pool: Vec<String> = files.iter().flatten().cloned().collect();
    pool.extend(["-1e308", "0", "\"x\"", "*", "<", ">", "[", "]", "-1", "nan"].map(String::from));
    pool.sort();
    pool.dedup();

    const MUTATIONS: usize = 100_000;
    let mut rng = fastrand::Rng::with_seed(0xacce);
    let (mut accepted, mut panics) = (0, 0);
    for _ in 0..MUTATIONS {
        let mut toks = files[rng.usize(..files.len())].clone();
        for _ in 0..rng.usize(1..4) {
            mutate(&mut rng, &mut toks, &pool);
        }
        let text = toks.join(" ");
        let ok = catch_unwind(|| match parse(&text) {
            Ok(m) => {
                let _ = lower(&m, 300.0);
                let again = parse(&serialize(&m)).ok().map(|a| a.canonical());
                Some(again == Some(m.canonical()))
            }
            Err(d) => {
                assert!(!d.0.is_empty());
                None
            }
        });
        match ok {
            Ok(Some(true)) => accepted += 1,
            Ok(Some(false)) => return Err(format!("accepted mutant does not roundtrip:\n{text}")),
            Ok(None) => {}
            Err(_) => panics += 1,
        }
    }
    ensure!(panics == 0, "{panics} of {MUTATIONS} mutants panicked");
    Ok(format!("7 files match builders and roundtrip, {MUTATIONS} mutants without panic ({accepted} accepted)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("geometry properties", geometry),
        ("Dirac power conservation", dirac_power),
        ("Onsager consistency", onsager),
        ("effort equals gradient", effort_gradient),
        ("golden equations", golden_equations),
        ("functoriality", functoriality),
        ("damped oscillator vs closed form", damped_oscillator),
        ("free rigid body", free_body),
        ("two-body revolute system", two_body),
        ("convergence orders", orders),
        ("parser", parser),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
