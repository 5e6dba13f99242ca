//! Straight-line programs over junction states, efforts and flows. The same
//! nodes are evaluated numerically and printed as reduced equations.

use ephs_components::{laws, Coords, JointGeometry, Value};
use ephs_geom::{ad_star, cotrivialize, left_trivialize_unchecked, untrivialize, Convention, GroupElement, MaterialCotangent, MaterialTangent};
use nalgebra::{DMatrix, DVector};

use crate::error::AssembleError;

pub type Node = usize;

/// Shape of a value, used to build zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repr {
    Coords(usize),
    Tangent,
    Cotangent,
}

impl Repr {
    pub fn zero(self) -> Value {
        match self {
            Repr::Coords(n) => Value::Vector(Coords::zeros(n)),
            Repr::Tangent => Value::Tangent(MaterialTangent::zero()),
            Repr::Cotangent => Value::Cotangent(MaterialCotangent::zero()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Op {
    /// Differential state slot, printed with the junction name.
    State { slot: usize, name: String },
    /// Algebraic unknown at `offset..offset+dim` of `z`.
    Alg { offset: usize, dim: usize, name: String },
    /// Open outer port, capped at zero.
    External { name: String, repr: Repr },
    Zero(Repr),
    StorageEffort { boxi: usize, label: String, x: Node },
    Neg(Node),
    Sum(Vec<Node>, Repr),
    /// `T_eL_q(v)`; the identity on trivialized joint coordinates.
    TeL { q: Node, v: Node, coords: bool },
    /// `T*_eL_q(f)`; the identity on trivialized joint coordinates.
    TStarEL { q: Node, f: Node, coords: bool },
    /// `ad*_u(p)`.
    AdStar { u: Node, p: Node },
    AdInv { o: GroupElement, label: String, e: Node },
    AdStarInv { o: GroupElement, label: String, f: Node },
    AdIInv { q: Node, e: Node },
    AdStarIInv { q: Node, f: Node },
    Include { joint: JointGeometry, e: Node },
    Restrict { joint: JointGeometry, f: Node },
    Flat { mu: DMatrix<f64>, label: String, u: Node },
    /// `μ(u,u)/θ` with `θ = θ0 + se`.
    Quad { mu: DMatrix<f64>, label: String, u: Node, se: Node },
}

/// Evaluates storage efforts; implemented by the system that owns the components.
pub trait Storages {
    fn effort(&self, boxi: usize, x: &Value) -> Result<Value, AssembleError>;
}

#[derive(Debug, Clone, Default)]
pub struct Tape {
    pub ops: Vec<Op>,
}

fn coords(v: &Value) -> Coords {
    v.vector()
}

impl Tape {
    pub fn push(&mut self, op: Op) -> Node {
        self.ops.push(op);
        self.ops.len() - 1
    }

    pub fn eval(
        &self,
        x: &[Value],
        z: &[f64],
        theta0: f64,
        storages: &dyn Storages,
    ) -> Result<Vec<Value>, AssembleError> {
        let semi = Convention::SemidirectProduct;
        let mut v: Vec<Value> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let out = match op {
                Op::State { slot, .. } => x[*slot],
                Op::Alg { offset, dim, .. } => Value::Vector(Coords::from_slice(&z[*offset..offset + dim])),
                Op::External { repr, .. } => repr.zero(),
                Op::Zero(r) => r.zero(),
                Op::StorageEffort { boxi, x, .. } => storages.effort(*boxi, &v[*x])?,
                Op::Neg(a) => v[*a].scale(-1.0),
                Op::Sum(terms, repr) => {
                    let mut acc = repr.zero();
                    for t in terms {
                        acc = acc.add(&v[*t]);
                    }
                    acc
                }
                Op::TeL { q, v: u, coords: true } | Op::TStarEL { q, f: u, coords: true } => {
                    let _ = q;
                    v[*u]
                }
                Op::TeL { q, v: u, coords: false } => Value::Tangent(untrivialize(&v[*q].pose(), &coords(&v[*u]).twist())),
                Op::TStarEL { q, f, coords: false } => {
                    Value::Vector(Coords::from_wrench(&cotrivialize(&v[*q].pose(), &v[*f].cotangent())))
                }
                Op::AdStar { u, p } => {
                    Value::Vector(Coords::from_wrench(&ad_star(semi, &coords(&v[*u]).twist(), &coords(&v[*p]).wrench())))
                }
                Op::AdInv { o, e, .. } => Value::Vector(Coords::from_twist(&laws::offset_effort(o, &coords(&v[*e]).twist()))),
                Op::AdStarInv { o, f, .. } => {
                    Value::Vector(Coords::from_wrench(&o.inverse().coadjoint(&coords(&v[*f]).wrench())))
                }
                Op::AdIInv { q, e } => {
                    Value::Vector(Coords::from_twist(&v[*q].pose().inverse().adjoint(&coords(&v[*e]).twist())))
                }
                Op::AdStarIInv { q, f } => {
                    Value::Vector(Coords::from_wrench(&v[*q].pose().inverse().coadjoint(&coords(&v[*f]).wrench())))
                }
                Op::Include { joint, e } => Value::Vector(Coords::from_twist(&joint.include(&coords(&v[*e])))),
                Op::Restrict { joint, f } => Value::Vector(joint.restrict(&coords(&v[*f]).wrench())),
                Op::Flat { mu, u, .. } => {
                    let r = mu * DVector::from_column_slice(coords(&v[*u]).as_slice());
                    Value::Vector(Coords::from_slice(r.as_slice()))
                }
                Op::Quad { mu, label, u, se } => {
                    let theta = theta0 + coords(&v[*se]).as_slice()[0];
                    if !(theta > 0.0) {
                        return Err(AssembleError::Component {
                            path: label.clone(),
                            source: ephs_components::ComponentError::NonPositiveTemperature(theta),
                        });
                    }
                    let uu = DVector::from_column_slice(coords(&v[*u]).as_slice());
                    Value::Vector(Coords::scalar(uu.dot(&(mu * &uu)) / theta))
                }
            };
            v.push(out);
        }
        Ok(v)
    }

    /// Trivialized coordinates of a rate value: twists for pose rates.
    pub fn rate_coords(q: Option<&GroupElement>, rate: &Value) -> Coords {
        match rate {
            Value::Tangent(t) => Coords::from_twist(&left_trivialize_unchecked(q.expect("pose state"), t)),
            Value::Vector(c) => *c,
            other => panic!("not a rate: {other:?}"),
        }
    }
}

/// A printed term with its sign.
type Terms = Vec<(bool, String)>;

fn join(terms: &Terms) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (i, (neg, t)) in terms.iter().enumerate() {
        match (i, neg) {
            (0, false) => {}
            (0, true) => s.push('-'),
            (_, false) => s.push_str(" + "),
            (_, true) => s.push_str(" - "),
        }
        s.push_str(t);
    }
    s
}

impl Tape {
    /// Prints a node as a signed sum, expanding intermediate nodes.
    pub fn print(&self, n: Node) -> String {
        join(&self.terms(n))
    }

    fn inner(&self, n: Node) -> String {
        self.print(n)
    }

    // Linear operator: a single signed argument keeps its sign outside.
    fn linear(&self, head: String, arg: Node) -> Terms {
        let t = self.terms(arg);
        match t.len() {
            0 => vec![],
            1 => vec![(t[0].0, format!("{head}({})", t[0].1))],
            _ => vec![(false, format!("{head}({})", join(&t)))],
        }
    }

    fn terms(&self, n: Node) -> Terms {
        match &self.ops[n] {
            Op::State { name, .. } | Op::Alg { name, .. } | Op::External { name, .. } => vec![(false, name.clone())],
            Op::Zero(_) => vec![],
            Op::StorageEffort { label, x, .. } => vec![(false, format!("dE[{label}]({})", self.inner(*x)))],
            Op::Neg(a) => self.terms(*a).into_iter().map(|(s, t)| (!s, t)).collect(),
            Op::Sum(ts, _) => ts.iter().flat_map(|t| self.terms(*t)).collect(),
            Op::TeL { q, v, .. } => self.linear(format!("TeL[{}]", self.inner(*q)), *v),
            Op::TStarEL { q, f, .. } => self.linear(format!("T*eL[{}]", self.inner(*q)), *f),
            Op::AdStar { u, p } => self.linear(format!("ad*[{}]", self.inner(*u)), *p),
            Op::AdInv { label, e, .. } => self.linear(format!("Ad[{label}⁻¹]"), *e),
            Op::AdStarInv { label, f, .. } => self.linear(format!("Ad*[{label}⁻¹]"), *f),
            Op::AdIInv { q, e } => self.linear(format!("Ad[I({})⁻¹]", self.inner(*q)), *e),
            Op::AdStarIInv { q, f } => self.linear(format!("Ad*[I({})⁻¹]", self.inner(*q)), *f),
            Op::Include { e, .. } => self.linear("i".into(), *e),
            Op::Restrict { f, .. } => self.linear("i*".into(), *f),
            Op::Flat { label, u, .. } => self.linear(format!("μ♭[{label}]"), *u),
            Op::Quad { label, u, se, .. } => {
                let u = self.inner(*u);
                let theta = match self.terms(*se).as_slice() {
                    [] => "θ0".to_string(),
                    t => format!("(θ0 + {})", join(&t.to_vec())),
                };
                vec![(false, format!("μ[{label}]({u}, {u})/{theta}"))]
            }
        }
    }
}
