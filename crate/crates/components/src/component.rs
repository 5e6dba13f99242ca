use std::collections::BTreeMap;

use ephs_core::{Interface, JointKind, Leaf, PortDecl, Quantity};
use ephs_geom::{right_jacobian_inv, Convention, GroupElement, Mat3, MaterialCotangent, Twist, Vec3};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::ComponentError;
use crate::joint::JointGeometry;
use crate::laws;
use crate::value::{Coords, Value};

const SEMI: Convention = Convention::SemidirectProduct;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    Storage,
    Reversible,
    Irreversible,
    Environment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PkcSpace {
    /// `(q, p)` over `displacement` and `momentum`.
    Scalar,
    /// `(q, p)` over `pose` and `momentum<g*>`.
    Body,
    /// `(q_r, p_r)` over a joint subgroup and its dual algebra.
    Joint(JointKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrictionSpace {
    /// `(p, s)` with a one-dimensional momentum.
    Scalar,
    /// `(p_r, s)` with joint momentum.
    Joint(JointKind),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// `V(q) = ½ ξᵀ K ξ` with `ξ = B⁺ log q`.
    QuadraticLog(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyParams {
    pub m: f64,
    pub inertia: Mat3,
    /// Gravity force covector; the potential is `m gᵀ r`.
    pub g: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointParams {
    pub geometry: JointGeometry,
    pub o1: GroupElement,
    pub o2: GroupElement,
    pub mu: DMatrix<f64>,
    pub potential: Potential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvParams {
    pub theta0: f64,
}

/// A primitive system filling a box.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    /// `E = ½ k q²`.
    Spring { k: f64 },
    /// `E = p² / 2m`.
    Mass { m: f64 },
    /// `E = ½ p_ωᵀ J⁻¹ p_ω + |p_υ|² / 2m`.
    Kinetic { m: f64, inertia: Mat3 },
    /// `E = m gᵀ r`.
    Gravity { m: f64, g: Vec3 },
    JointPotential { joint: JointGeometry, potential: Potential },
    Pkc(PkcSpace),
    LiePoisson,
    /// Ports `p{side}` and `pj{side}`.
    Offset { o: GroupElement, side: u8 },
    Constraint { joint: JointGeometry },
    Friction { space: FrictionSpace, mu: DMatrix<f64> },
    Environment { theta0: f64 },
}

fn bad(name: &str, reason: &str) -> ComponentError {
    ComponentError::BadParam { name: name.into(), reason: reason.into() }
}

fn positive(name: &str, x: f64) -> Result<(), ComponentError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(bad(name, &format!("must be positive and finite, got {x}")))
    }
}

fn symmetric_eigenvalues(name: &str, a: &DMatrix<f64>, k: usize) -> Result<DVector<f64>, ComponentError> {
    if a.nrows() != k || a.ncols() != k {
        return Err(bad(name, &format!("must be {k}x{k}, got {}x{}", a.nrows(), a.ncols())));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(bad(name, "entries must be finite"));
    }
    let scale = a.abs().max().max(1.0);
    if (a - a.transpose()).abs().max() > 1e-12 * scale {
        return Err(bad(name, "must be symmetric"));
    }
    Ok(SymmetricEigen::new(a.clone()).eigenvalues)
}

fn nonneg_definite(name: &str, a: &DMatrix<f64>, k: usize) -> Result<(), ComponentError> {
    let ev = symmetric_eigenvalues(name, a, k)?;
    if ev.iter().any(|&l| l < -1e-12 * a.abs().max().max(1.0)) {
        return Err(bad(name, "must be non-negative definite"));
    }
    Ok(())
}

impl BodyParams {
    pub fn validate(&self) -> Result<(), ComponentError> {
        positive("m", self.m)?;
        let j = DMatrix::from_column_slice(3, 3, self.inertia.as_slice());
        let ev = symmetric_eigenvalues("J", &j, 3)?;
        if ev.iter().any(|&l| l <= 0.0) {
            return Err(bad("J", "must be positive definite"));
        }
        if self.g.iter().any(|x| !x.is_finite()) {
            return Err(bad("g", "entries must be finite"));
        }
        Ok(())
    }
}

impl JointParams {
    pub fn validate(&self) -> Result<(), ComponentError> {
        for (name, o) in [("o1", &self.o1), ("o2", &self.o2)] {
            if o.convention != SEMI {
                return Err(bad(name, "offsets use the semidirect product"));
            }
            o.check().map_err(|e| bad(name, &e.to_string()))?;
        }
        let k = self.geometry.dim();
        nonneg_definite("mu", &self.mu, k)?;
        if let Potential::QuadraticLog(s) = &self.potential {
            nonneg_definite("stiffness", s, k)?;
        }
        Ok(())
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<(), ComponentError> {
        positive("theta0", self.theta0)
    }
}

/// Revolute joint about a unit axis with scalar friction coefficient `mu`.
pub fn make_revolute(
    axis: Vec3,
    o1: GroupElement,
    o2: GroupElement,
    mu: f64,
    potential: Potential,
) -> Result<JointParams, ComponentError> {
    let p = JointParams {
        geometry: JointGeometry::revolute(axis)?,
        o1,
        o2,
        mu: DMatrix::from_element(1, 1, mu),
        potential,
    };
    p.validate()?;
    Ok(p)
}

impl Component {
    pub fn spring(k: f64) -> Result<Self, ComponentError> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(bad("k", "must be non-negative and finite"));
        }
        Ok(Component::Spring { k })
    }

    pub fn mass(m: f64) -> Result<Self, ComponentError> {
        positive("m", m)?;
        Ok(Component::Mass { m })
    }

    pub fn kinetic(p: &BodyParams) -> Result<Self, ComponentError> {
        p.validate()?;
        Ok(Component::Kinetic { m: p.m, inertia: p.inertia })
    }

    pub fn gravity(p: &BodyParams) -> Result<Self, ComponentError> {
        p.validate()?;
        Ok(Component::Gravity { m: p.m, g: p.g })
    }

    pub fn joint_potential(p: &JointParams) -> Result<Self, ComponentError> {
        p.validate()?;
        Ok(Component::JointPotential { joint: p.geometry.clone(), potential: p.potential.clone() })
    }

    pub fn offset(o: GroupElement, side: u8) -> Result<Self, ComponentError> {
        if o.convention != SEMI {
            return Err(bad("o", "offsets use the semidirect product"));
        }
        o.check().map_err(|e| bad("o", &e.to_string()))?;
        if side != 1 && side != 2 {
            return Err(bad("side", "must be 1 or 2"));
        }
        Ok(Component::Offset { o, side })
    }

    pub fn constraint(p: &JointParams) -> Result<Self, ComponentError> {
        p.validate()?;
        Ok(Component::Constraint { joint: p.geometry.clone() })
    }

    pub fn damper(d: f64) -> Result<Self, ComponentError> {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(bad("d", "must be non-negative and finite"));
        }
        Ok(Component::Friction { space: FrictionSpace::Scalar, mu: DMatrix::from_element(1, 1, d) })
    }

    pub fn joint_friction(p: &JointParams) -> Result<Self, ComponentError> {
        p.validate()?;
        Ok(Component::Friction { space: FrictionSpace::Joint(p.geometry.kind), mu: p.mu.clone() })
    }

    pub fn environment(p: &EnvParams) -> Result<Self, ComponentError> {
        p.validate()?;
        Ok(Component::Environment { theta0: p.theta0 })
    }

    pub fn kind(&self) -> ComponentKind {
        match self {
            Component::Spring { .. }
            | Component::Mass { .. }
            | Component::Kinetic { .. }
            | Component::Gravity { .. }
            | Component::JointPotential { .. } => ComponentKind::Storage,
            Component::Pkc(_) | Component::LiePoisson | Component::Offset { .. } | Component::Constraint { .. } => {
                ComponentKind::Reversible
            }
            Component::Friction { .. } => ComponentKind::Irreversible,
            Component::Environment { .. } => ComponentKind::Environment,
        }
    }

    /// Short catalog name.
    pub fn name(&self) -> &'static str {
        match self {
            Component::Spring { .. } => "spring",
            Component::Mass { .. } => "mass",
            Component::Kinetic { .. } => "kinetic",
            Component::Gravity { .. } => "gravity",
            Component::JointPotential { .. } => "joint_potential",
            Component::Pkc(_) => "pkc",
            Component::LiePoisson => "lp",
            Component::Offset { .. } => "offset",
            Component::Constraint { .. } => "hc",
            Component::Friction { .. } => "friction",
            Component::Environment { .. } => "env",
        }
    }

    pub fn interface(&self) -> Interface {
        let p = PortDecl::power;
        let g = Quantity::body_momentum;
        let ports = match self {
            Component::Spring { .. } => vec![p("q", Quantity::displacement())],
            Component::Mass { .. } => vec![p("p", Quantity::momentum())],
            Component::Kinetic { .. } => vec![p("p", g())],
            Component::Gravity { .. } => vec![p("q", Quantity::pose())],
            Component::JointPotential { joint, .. } => vec![p("q_r", Quantity::relative_pose(joint.kind))],
            Component::Pkc(PkcSpace::Scalar) => vec![p("q", Quantity::displacement()), p("p", Quantity::momentum())],
            Component::Pkc(PkcSpace::Body) => vec![p("q", Quantity::pose()), p("p", g())],
            Component::Pkc(PkcSpace::Joint(k)) => {
                vec![p("q_r", Quantity::relative_pose(*k)), p("p_r", Quantity::joint_momentum(*k))]
            }
            Component::LiePoisson => vec![p("p", g())],
            Component::Offset { side, .. } => vec![p(&format!("p{side}"), g()), p(&format!("pj{side}"), g())],
            Component::Constraint { joint } => vec![
                PortDecl::state("q_r", Quantity::relative_pose(joint.kind)),
                p("p_r", Quantity::joint_momentum(joint.kind)),
                p("pj1", g()),
                p("pj2", g()),
            ],
            Component::Friction { space: FrictionSpace::Scalar, .. } => {
                vec![p("p", Quantity::momentum()), p("s", Quantity::entropy())]
            }
            Component::Friction { space: FrictionSpace::Joint(k), .. } => {
                vec![p("p_r", Quantity::joint_momentum(*k)), p("s", Quantity::entropy())]
            }
            Component::Environment { .. } => vec![p("s", Quantity::entropy())],
        };
        Interface::new(ports)
    }

    /// The single port of a storage or environment component.
    pub fn storage_port(&self) -> Option<String> {
        match self.kind() {
            ComponentKind::Storage | ComponentKind::Environment => Some(self.interface().ports[0].name.clone()),
            _ => None,
        }
    }

    fn state_error(&self, x: &Value) -> ComponentError {
        ComponentError::BadState(format!("{} cannot hold state {x:?}", self.name()))
    }

    fn expect_coords(&self, x: &Value, len: usize) -> Result<Coords, ComponentError> {
        match x {
            Value::Vector(c) if c.len() == len && c.as_slice().iter().all(|v| v.is_finite()) => Ok(*c),
            _ => Err(self.state_error(x)),
        }
    }

    fn expect_pose(&self, x: &Value) -> Result<GroupElement, ComponentError> {
        match x {
            Value::Pose(q) if q.convention == SEMI && q.check().is_ok() => Ok(*q),
            _ => Err(self.state_error(x)),
        }
    }

    /// Stored energy (for the environment, the exergy-free bookkeeping term `θ0 s`).
    pub fn storage_energy(&self, x: &Value) -> Result<f64, ComponentError> {
        match self {
            Component::Spring { k } => {
                let q = self.expect_coords(x, 1)?.as_slice()[0];
                Ok(0.5 * k * q * q)
            }
            Component::Mass { m } => {
                let p = self.expect_coords(x, 1)?.as_slice()[0];
                Ok(0.5 * p * p / m)
            }
            Component::Kinetic { m, inertia } => {
                let p = self.expect_coords(x, 6)?.wrench();
                let w = inertia.try_inverse().expect("validated inertia") * p.ang;
                Ok(0.5 * p.ang.dot(&w) + 0.5 * p.lin.norm_squared() / m)
            }
            Component::Gravity { m, g } => Ok(m * g.dot(&self.expect_pose(x)?.trans)),
            Component::JointPotential { joint, potential } => {
                let q = self.expect_pose(x)?;
                match potential {
                    Potential::Zero => Ok(0.0),
                    Potential::QuadraticLog(k) => {
                        let xi = DVector::from_column_slice(joint.coords(&q)?.as_slice());
                        Ok(0.5 * xi.dot(&(k * &xi)))
                    }
                }
            }
            Component::Environment { theta0 } => Ok(theta0 * self.expect_coords(x, 1)?.as_slice()[0]),
            _ => Err(ComponentError::BadSignature(format!("{} stores no energy", self.name()))),
        }
    }

    /// Differential of the stored energy: the effort at the storage port. Joint
    /// potentials return the left-trivialized differential in joint coordinates.
    pub fn storage_effort(&self, x: &Value) -> Result<Value, ComponentError> {
        match self {
            Component::Spring { k } => Ok(Value::Vector(self.expect_coords(x, 1)?.scale(*k))),
            Component::Mass { m } => Ok(Value::Vector(self.expect_coords(x, 1)?.scale(1.0 / m))),
            Component::Kinetic { m, inertia } => {
                let p = self.expect_coords(x, 6)?.wrench();
                let w = inertia.try_inverse().expect("validated inertia") * p.ang;
                Ok(Value::Vector(Coords::from_twist(&Twist::new(w, p.lin / *m))))
            }
            Component::Gravity { m, g } => {
                self.expect_pose(x)?;
                Ok(Value::Cotangent(MaterialCotangent::new(Mat3::zeros(), *m * *g)))
            }
            Component::JointPotential { joint, potential } => {
                let q = self.expect_pose(x)?;
                let kdim = joint.dim();
                match potential {
                    Potential::Zero => Ok(Value::Vector(Coords::zeros(kdim))),
                    Potential::QuadraticLog(k) => {
                        let zeta = q.log().map_err(|e| ComponentError::BadState(e.to_string()))?;
                        let xi = DVector::from_column_slice(joint.coords_of(&zeta).as_slice());
                        let kxi = k * xi;
                        // dV along exp(B c): (K ξ)ᵀ B⁺ J_r⁻¹(ζ) B c
                        let b = joint.matrix();
                        let pinv = b.clone().pseudo_inverse(1e-12).expect("full rank basis");
                        let jr = right_jacobian_inv(SEMI, &zeta);
                        let jr = DMatrix::from_column_slice(6, 6, jr.as_slice());
                        let e = (pinv * jr * b).transpose() * kxi;
                        Ok(Value::Vector(Coords::from_slice(e.as_slice())))
                    }
                }
            }
            Component::Environment { .. } => {
                self.expect_coords(x, 1)?;
                Ok(Value::Vector(Coords::scalar(0.0)))
            }
            _ => Err(ComponentError::BadSignature(format!("{} has no storage effort", self.name()))),
        }
    }

    /// Environment effort; identically zero.
    pub fn env_effort(&self) -> Result<Value, ComponentError> {
        match self {
            Component::Environment { .. } => Ok(Value::Vector(Coords::scalar(0.0))),
            _ => Err(ComponentError::BadSignature(format!("{} is not an environment", self.name()))),
        }
    }

    /// Evaluates a reversible component on its causality signature, returning the
    /// inputs completed by the outputs. The constraint component also reports the
    /// velocity constraint residual `C e`.
    pub fn dirac_eval(&self, io: &PortVars) -> Result<PortVars, ComponentError> {
        let mut out = io.clone();
        match self {
            Component::Pkc(PkcSpace::Body) => {
                let q = io.state("q")?.pose_checked()?;
                let qe = io.effort("q")?.cotangent_checked()?;
                let pe = io.effort("p")?.coords_checked(6)?.twist();
                let (qf, pf) = laws::pkc_body(&q, &qe, &pe);
                out.flow.insert("q".into(), Value::Tangent(qf));
                out.flow.insert("p".into(), Value::Vector(Coords::from_wrench(&pf)));
            }
            Component::Pkc(space) => {
                let (qn, pn, k) = match space {
                    PkcSpace::Joint(k) => ("q_r", "p_r", k.dim()),
                    _ => ("q", "p", 1),
                };
                let qe = io.effort(qn)?.coords_checked(k)?;
                let pe = io.effort(pn)?.coords_checked(k)?;
                let (qf, pf) = laws::pkc_coords(&qe, &pe);
                out.flow.insert(qn.into(), Value::Vector(qf));
                out.flow.insert(pn.into(), Value::Vector(pf));
            }
            Component::LiePoisson => {
                let p = io.state("p")?.coords_checked(6)?.wrench();
                let u = io.effort("p")?.coords_checked(6)?.twist();
                out.flow.insert("p".into(), Value::Vector(Coords::from_wrench(&laws::lie_poisson(&p, &u))));
            }
            Component::Offset { o, side } => {
                let (pn, jn) = (format!("p{side}"), format!("pj{side}"));
                let pe = io.effort(&pn)?.coords_checked(6)?.twist();
                let jf = io.flow(&jn)?.coords_checked(6)?.wrench();
                out.effort.insert(jn, Value::Vector(Coords::from_twist(&laws::offset_effort(o, &pe))));
                out.flow.insert(pn, Value::Vector(Coords::from_wrench(&laws::offset_flow(o, &jf))));
            }
            Component::Constraint { joint } => {
                let q = io.state("q_r")?.pose_checked()?;
                let lambda = io
                    .multiplier
                    .ok_or_else(|| ComponentError::BadSignature("multiplier missing".into()))?;
                if lambda.len() != 6 {
                    return Err(ComponentError::BadSignature("multiplier must have six entries".into()));
                }
                let lambda = lambda.wrench();
                let (f1, f2, fr) = laws::constraint_flows(joint, &q, &lambda);
                out.flow.insert("pj1".into(), Value::Vector(Coords::from_wrench(&f1)));
                out.flow.insert("pj2".into(), Value::Vector(Coords::from_wrench(&f2)));
                out.flow.insert("p_r".into(), Value::Vector(fr));
                let e1 = io.effort("pj1")?.coords_checked(6)?.twist();
                let e2 = io.effort("pj2")?.coords_checked(6)?.twist();
                let er = io.effort("p_r")?.coords_checked(joint.dim())?;
                let r = laws::constraint_residual(joint, &q, &e1, &e2, &er);
                out.residual = Some(Coords::from_twist(&r));
            }
            _ => return Err(ComponentError::BadSignature(format!("{} is not reversible", self.name()))),
        }
        Ok(out)
    }

    /// Evaluates an irreversible component: `(p.f, s.f)` from `(p.e, s.e)` and `θ0`.
    pub fn onsager_eval(&self, io: &PortVars, theta0: f64) -> Result<PortVars, ComponentError> {
        let Component::Friction { space, mu } = self else {
            return Err(ComponentError::BadSignature(format!("{} is not irreversible", self.name())));
        };
        let pn = match space {
            FrictionSpace::Scalar => "p",
            FrictionSpace::Joint(_) => "p_r",
        };
        let u = io.effort(pn)?.coords_checked(mu.nrows())?;
        let se = io.effort("s")?.coords_checked(1)?.as_slice()[0];
        let (pf, sf) = laws::friction(mu, theta0, &u, se)?;
        let mut out = io.clone();
        out.flow.insert(pn.into(), Value::Vector(pf));
        out.flow.insert("s".into(), Value::Vector(Coords::scalar(sf)));
        Ok(out)
    }
}

impl Leaf for Component {
    fn interface(&self) -> Interface {
        Component::interface(self)
    }
}

/// Port variables of one component, keyed by port name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PortVars {
    pub effort: BTreeMap<String, Value>,
    pub flow: BTreeMap<String, Value>,
    pub state: BTreeMap<String, Value>,
    pub multiplier: Option<Coords>,
    pub residual: Option<Coords>,
}

fn missing(what: &str, port: &str) -> ComponentError {
    ComponentError::BadSignature(format!("{what} of port `{port}` missing"))
}

impl PortVars {
    pub fn effort(&self, port: &str) -> Result<&Value, ComponentError> {
        self.effort.get(port).ok_or_else(|| missing("effort", port))
    }

    pub fn flow(&self, port: &str) -> Result<&Value, ComponentError> {
        self.flow.get(port).ok_or_else(|| missing("flow", port))
    }

    pub fn state(&self, port: &str) -> Result<&Value, ComponentError> {
        self.state.get(port).ok_or_else(|| missing("state", port))
    }

    /// `Σ ⟨e|f⟩` over ports carrying both, minus `⟨λ|C e⟩` when a multiplier is present.
    pub fn power(&self) -> f64 {
        let ports: f64 = self
            .effort
            .iter()
            .filter_map(|(k, e)| self.flow.get(k).map(|f| Value::pair(e, f)))
            .sum();
        match (&self.multiplier, &self.residual) {
            (Some(l), Some(r)) => ports - l.dot(r),
            _ => ports,
        }
    }
}

trait Checked {
    fn coords_checked(&self, len: usize) -> Result<Coords, ComponentError>;
    fn pose_checked(&self) -> Result<GroupElement, ComponentError>;
    fn cotangent_checked(&self) -> Result<MaterialCotangent, ComponentError>;
}

impl Checked for Value {
    fn coords_checked(&self, len: usize) -> Result<Coords, ComponentError> {
        match self {
            Value::Vector(c) if c.len() == len => Ok(*c),
            v => Err(ComponentError::BadSignature(format!("expected {len} coordinates, got {v:?}"))),
        }
    }

    fn pose_checked(&self) -> Result<GroupElement, ComponentError> {
        match self {
            Value::Pose(q) => Ok(*q),
            v => Err(ComponentError::BadSignature(format!("expected a pose, got {v:?}"))),
        }
    }

    fn cotangent_checked(&self) -> Result<MaterialCotangent, ComponentError> {
        match self {
            Value::Cotangent(f) => Ok(*f),
            v => Err(ComponentError::BadSignature(format!("expected a material covector, got {v:?}"))),
        }
    }
}
