use ephs_components::{BodyParams, Component, EnvParams, JointParams, PkcSpace};
use ephs_core::{Binding, Pattern, PortDecl, Quantity};

use crate::ModelError;

pub type Model = (Pattern, Binding<Component>);

fn g() -> Quantity {
    Quantity::body_momentum()
}

/// The mechanical oscillator: potential and kinetic energy coupled by `pkc`,
/// with the kinetic domain exposed as outer port `p`.
pub fn oscillator_pattern() -> Pattern {
    let (x, p) = (Quantity::displacement, Quantity::momentum);
    Pattern::new("osc")
        .with_outer(PortDecl::power("p", p()))
        .with_junction("q", x())
        .with_junction("p", p())
        .with_box("pe", vec![PortDecl::power("q", x())])
        .with_box("ke", vec![PortDecl::power("p", p())])
        .with_box("pkc", vec![PortDecl::power("q", x()), PortDecl::power("p", p())])
        .with_wire("p", "p")
        .with_wire("pe.q", "q")
        .with_wire("ke.p", "p")
        .with_wire("pkc.q", "q")
        .with_wire("pkc.p", "p")
}

pub fn build_oscillator(m: f64, k: f64) -> Result<Model, ModelError> {
    let b = Binding::new()
        .leaf("pe", Component::spring(k)?)
        .leaf("ke", Component::mass(m)?)
        .leaf("pkc", Component::Pkc(PkcSpace::Scalar));
    Ok((oscillator_pattern(), b))
}

pub fn damped_oscillator_pattern() -> Pattern {
    let (p, s) = (Quantity::momentum, Quantity::entropy);
    Pattern::new("damped_osc")
        .with_junction("p", p())
        .with_junction("s", s())
        .with_box("osc", vec![PortDecl::power("p", p())])
        .with_box("mf", vec![PortDecl::power("p", p()), PortDecl::power("s", s())])
        .with_box("env", vec![PortDecl::power("s", s())])
        .with_wire("osc.p", "p")
        .with_wire("mf.p", "p")
        .with_wire("mf.s", "s")
        .with_wire("env.s", "s")
}

fn damped_leaves(d: f64, theta0: f64) -> Result<(Component, Component), ModelError> {
    Ok((Component::damper(d)?, Component::environment(&EnvParams { theta0 })?))
}

/// The oscillator nested in a pattern with mechanical friction and an
/// isothermal environment.
pub fn build_damped_oscillator(m: f64, k: f64, d: f64, theta0: f64) -> Result<Model, ModelError> {
    let (op, ob) = build_oscillator(m, k)?;
    let (mf, env) = damped_leaves(d, theta0)?;
    let b = Binding::new().nested("osc", op, ob).leaf("mf", mf).leaf("env", env);
    Ok((damped_oscillator_pattern(), b))
}

/// The damped oscillator drawn directly as one flat pattern.
pub fn damped_oscillator_flat_pattern() -> Pattern {
    let (x, p, s) = (Quantity::displacement, Quantity::momentum, Quantity::entropy);
    Pattern::new("damped_osc")
        .with_junction("osc.q", x())
        .with_junction("p", p())
        .with_junction("s", s())
        .with_box("osc.pe", vec![PortDecl::power("q", x())])
        .with_box("osc.ke", vec![PortDecl::power("p", p())])
        .with_box("osc.pkc", vec![PortDecl::power("q", x()), PortDecl::power("p", p())])
        .with_box("mf", vec![PortDecl::power("p", p()), PortDecl::power("s", s())])
        .with_box("env", vec![PortDecl::power("s", s())])
        .with_wire("osc.pe.q", "osc.q")
        .with_wire("osc.ke.p", "p")
        .with_wire("osc.pkc.q", "osc.q")
        .with_wire("osc.pkc.p", "p")
        .with_wire("mf.p", "p")
        .with_wire("mf.s", "s")
        .with_wire("env.s", "s")
}

pub fn build_damped_oscillator_flat(m: f64, k: f64, d: f64, theta0: f64) -> Result<Model, ModelError> {
    let (_, ob) = build_oscillator(m, k)?;
    let (mf, env) = damped_leaves(d, theta0)?;
    let mut b = Binding::new().leaf("mf", mf).leaf("env", env);
    for (name, f) in ob.boxes {
        b.boxes.insert(format!("osc.{name}"), f);
    }
    Ok((damped_oscillator_flat_pattern(), b))
}

/// Rigid body with potential and kinetic energy, their coupling and the
/// gyroscopic Lie-Poisson term; outer port `p` exposes the kinetic domain.
pub fn body_pattern() -> Pattern {
    let q = Quantity::pose;
    Pattern::new("body")
        .with_outer(PortDecl::power("p", g()))
        .with_junction("q", q())
        .with_junction("p", g())
        .with_box("pe", vec![PortDecl::power("q", q())])
        .with_box("ke", vec![PortDecl::power("p", g())])
        .with_box("pkc", vec![PortDecl::power("q", q()), PortDecl::power("p", g())])
        .with_box("lp", vec![PortDecl::power("p", g())])
        .with_wire("p", "p")
        .with_wire("pe.q", "q")
        .with_wire("ke.p", "p")
        .with_wire("pkc.q", "q")
        .with_wire("pkc.p", "p")
        .with_wire("lp.p", "p")
}

pub fn body_binding(params: &BodyParams) -> Result<Binding<Component>, ModelError> {
    Ok(Binding::new()
        .leaf("pe", Component::gravity(params)?)
        .leaf("ke", Component::kinetic(params)?)
        .leaf("pkc", Component::Pkc(PkcSpace::Body))
        .leaf("lp", Component::LiePoisson))
}

pub fn build_body(params: &BodyParams) -> Result<Model, ModelError> {
    Ok((body_pattern(), body_binding(params)?))
}

/// Joint between two body momentum domains `p1`, `p2`: offsets to the joint
/// frames, the holonomic constraint with its relative pose as a state port,
/// relative potential energy, friction and the environment.
pub fn joint_pattern(params: &JointParams) -> Pattern {
    let k = params.geometry.kind;
    let qr = || Quantity::relative_pose(k);
    let pr = || Quantity::joint_momentum(k);
    let s = Quantity::entropy;
    Pattern::new("joint")
        .with_outer(PortDecl::power("p1", g()))
        .with_outer(PortDecl::power("p2", g()))
        .with_junction("p1", g())
        .with_junction("p2", g())
        .with_junction("pj1", g())
        .with_junction("pj2", g())
        .with_junction("q_r", qr())
        .with_junction("p_r", pr())
        .with_junction("s", s())
        .with_box(
            "hc",
            vec![
                PortDecl::state("q_r", qr()),
                PortDecl::power("p_r", pr()),
                PortDecl::power("pj1", g()),
                PortDecl::power("pj2", g()),
            ],
        )
        .with_box("o1", vec![PortDecl::power("p1", g()), PortDecl::power("pj1", g())])
        .with_box("o2", vec![PortDecl::power("p2", g()), PortDecl::power("pj2", g())])
        .with_box("pe", vec![PortDecl::power("q_r", qr())])
        .with_box("pkc", vec![PortDecl::power("q_r", qr()), PortDecl::power("p_r", pr())])
        .with_box("mf", vec![PortDecl::power("p_r", pr()), PortDecl::power("s", s())])
        .with_box("env", vec![PortDecl::power("s", s())])
        .with_wire("p1", "p1")
        .with_wire("p2", "p2")
        .with_wire("hc.q_r", "q_r")
        .with_wire("hc.p_r", "p_r")
        .with_wire("hc.pj1", "pj1")
        .with_wire("hc.pj2", "pj2")
        .with_wire("o1.p1", "p1")
        .with_wire("o1.pj1", "pj1")
        .with_wire("o2.p2", "p2")
        .with_wire("o2.pj2", "pj2")
        .with_wire("pe.q_r", "q_r")
        .with_wire("pkc.q_r", "q_r")
        .with_wire("pkc.p_r", "p_r")
        .with_wire("mf.p_r", "p_r")
        .with_wire("mf.s", "s")
        .with_wire("env.s", "s")
}

pub fn joint_binding(params: &JointParams, env: &EnvParams) -> Result<Binding<Component>, ModelError> {
    params.validate()?;
    Ok(Binding::new()
        .leaf("hc", Component::constraint(params)?)
        .leaf("o1", Component::offset(params.o1, 1)?)
        .leaf("o2", Component::offset(params.o2, 2)?)
        .leaf("pe", Component::joint_potential(params)?)
        .leaf("pkc", Component::Pkc(PkcSpace::Joint(params.geometry.kind)))
        .leaf("mf", Component::joint_friction(params)?)
        .leaf("env", Component::environment(env)?))
}

pub fn build_joint(params: &JointParams, env: &EnvParams) -> Result<Model, ModelError> {
    Ok((joint_pattern(params), joint_binding(params, env)?))
}

/// Two bodies `b1`, `b2` connected by a joint `j`; the system is isolated.
pub fn mbs_pattern() -> Pattern {
    Pattern::new("mbs")
        .with_junction("p1", g())
        .with_junction("p2", g())
        .with_box("b1", vec![PortDecl::power("p", g())])
        .with_box("b2", vec![PortDecl::power("p", g())])
        .with_box("j", vec![PortDecl::power("p1", g()), PortDecl::power("p2", g())])
        .with_wire("b1.p", "p1")
        .with_wire("b2.p", "p2")
        .with_wire("j.p1", "p1")
        .with_wire("j.p2", "p2")
}

pub fn build_basic_mbs(
    body1: &BodyParams,
    body2: &BodyParams,
    joint: &JointParams,
    env: &EnvParams,
) -> Result<Model, ModelError> {
    let (b1p, b1b) = build_body(body1)?;
    let (b2p, b2b) = build_body(body2)?;
    let (jp, jb) = build_joint(joint, env)?;
    let b = Binding::new().nested("b1", b1p, b1b).nested("b2", b2p, b2b).nested("j", jp, jb);
    Ok((mbs_pattern(), b))
}

/// The flattened multibody pattern, written out box by box.
pub fn mbs_flat_pattern(joint: &JointParams) -> Pattern {
    let k = joint.geometry.kind;
    let q = Quantity::pose;
    let qr = || Quantity::relative_pose(k);
    let pr = || Quantity::joint_momentum(k);
    let s = Quantity::entropy;
    let mut p = Pattern::new("mbs");
    for b in ["b1", "b2"] {
        let pj = if b == "b1" { "p1" } else { "p2" };
        p = p
            .with_junction(&format!("{b}.q"), q())
            .with_box(&format!("{b}.pe"), vec![PortDecl::power("q", q())])
            .with_box(&format!("{b}.ke"), vec![PortDecl::power("p", g())])
            .with_box(&format!("{b}.pkc"), vec![PortDecl::power("q", q()), PortDecl::power("p", g())])
            .with_box(&format!("{b}.lp"), vec![PortDecl::power("p", g())])
            .with_wire(&format!("{b}.pe.q"), &format!("{b}.q"))
            .with_wire(&format!("{b}.ke.p"), pj)
            .with_wire(&format!("{b}.pkc.q"), &format!("{b}.q"))
            .with_wire(&format!("{b}.pkc.p"), pj)
            .with_wire(&format!("{b}.lp.p"), pj);
    }
    p.with_junction("p1", g())
        .with_junction("p2", g())
        .with_junction("j.pj1", g())
        .with_junction("j.pj2", g())
        .with_junction("j.q_r", qr())
        .with_junction("j.p_r", pr())
        .with_junction("j.s", s())
        .with_box(
            "j.hc",
            vec![
                PortDecl::state("q_r", qr()),
                PortDecl::power("p_r", pr()),
                PortDecl::power("pj1", g()),
                PortDecl::power("pj2", g()),
            ],
        )
        .with_box("j.o1", vec![PortDecl::power("p1", g()), PortDecl::power("pj1", g())])
        .with_box("j.o2", vec![PortDecl::power("p2", g()), PortDecl::power("pj2", g())])
        .with_box("j.pe", vec![PortDecl::power("q_r", qr())])
        .with_box("j.pkc", vec![PortDecl::power("q_r", qr()), PortDecl::power("p_r", pr())])
        .with_box("j.mf", vec![PortDecl::power("p_r", pr()), PortDecl::power("s", s())])
        .with_box("j.env", vec![PortDecl::power("s", s())])
        .with_wire("j.hc.q_r", "j.q_r")
        .with_wire("j.hc.p_r", "j.p_r")
        .with_wire("j.hc.pj1", "j.pj1")
        .with_wire("j.hc.pj2", "j.pj2")
        .with_wire("j.o1.p1", "p1")
        .with_wire("j.o1.pj1", "j.pj1")
        .with_wire("j.o2.p2", "p2")
        .with_wire("j.o2.pj2", "j.pj2")
        .with_wire("j.pe.q_r", "j.q_r")
        .with_wire("j.pkc.q_r", "j.q_r")
        .with_wire("j.pkc.p_r", "j.p_r")
        .with_wire("j.mf.p_r", "j.p_r")
        .with_wire("j.mf.s", "j.s")
        .with_wire("j.env.s", "j.s")
}

pub fn build_basic_mbs_flat(
    body1: &BodyParams,
    body2: &BodyParams,
    joint: &JointParams,
    env: &EnvParams,
) -> Result<Model, ModelError> {
    let mut b = Binding::new();
    for (prefix, inner) in [("b1", body_binding(body1)?), ("b2", body_binding(body2)?), ("j", joint_binding(joint, env)?)] {
        for (name, f) in inner.boxes {
            b.boxes.insert(format!("{prefix}.{name}"), f);
        }
    }
    Ok((mbs_flat_pattern(joint), b))
}
