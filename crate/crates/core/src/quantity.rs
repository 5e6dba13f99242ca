use std::fmt;
use std::str::FromStr;

use ephs_geom::Convention;
use serde::{Deserialize, Serialize};

/// Lower kinematic pairs; each determines a subgroup of SE(3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Spherical,
    Planar,
    Cylindrical,
    Revolute,
    Prismatic,
    Screw,
}

impl JointKind {
    pub const ALL: [JointKind; 6] = [
        JointKind::Spherical,
        JointKind::Planar,
        JointKind::Cylindrical,
        JointKind::Revolute,
        JointKind::Prismatic,
        JointKind::Screw,
    ];

    /// Dimension of the subgroup.
    pub fn dim(self) -> usize {
        match self {
            JointKind::Spherical | JointKind::Planar => 3,
            JointKind::Cylindrical => 2,
            JointKind::Revolute | JointKind::Prismatic | JointKind::Screw => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JointKind::Spherical => "spherical",
            JointKind::Planar => "planar",
            JointKind::Cylindrical => "cylindrical",
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
            JointKind::Screw => "screw",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Underlying space of a quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Space {
    Real(usize),
    /// Poses in `SO(3) x R3` or `SE(3)`.
    Group(Convention),
    /// Relative poses constrained to a joint subgroup of `SE(3)`.
    Subgroup(JointKind),
    /// Dual of the Lie algebra, `g*`.
    CoAlgebra(Convention),
    /// Dual of a joint subalgebra.
    SubCoAlgebra(JointKind),
}

impl Space {
    /// Number of coordinates of a (left-trivialized) tangent vector.
    pub fn tangent_dim(self) -> usize {
        match self {
            Space::Real(n) => n,
            Space::Group(_) | Space::CoAlgebra(_) => 6,
            Space::Subgroup(k) | Space::SubCoAlgebra(k) => k.dim(),
        }
    }

    /// Whether values live in a vector space (so efforts may be algebraic unknowns).
    pub fn is_linear(self) -> bool {
        !matches!(self, Space::Group(_) | Space::Subgroup(_))
    }
}

/// A physical quantity: a name together with its space of values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quantity {
    pub name: String,
    pub space: Space,
}

impl Quantity {
    pub fn new(name: &str, space: Space) -> Self {
        Self { name: name.to_string(), space }
    }

    pub fn displacement() -> Self {
        Self::new("displacement", Space::Real(1))
    }

    /// One-dimensional momentum.
    pub fn momentum() -> Self {
        Self::new("momentum", Space::Real(1))
    }

    /// Rigid-body momentum in `g*`.
    pub fn body_momentum() -> Self {
        Self::new("momentum", Space::CoAlgebra(Convention::SemidirectProduct))
    }

    /// Joint momentum in the dual of the joint subalgebra.
    pub fn joint_momentum(kind: JointKind) -> Self {
        Self::new("momentum", Space::SubCoAlgebra(kind))
    }

    pub fn pose() -> Self {
        Self::new("pose", Space::Group(Convention::SemidirectProduct))
    }

    pub fn relative_pose(kind: JointKind) -> Self {
        Self::new("relative_pose", Space::Subgroup(kind))
    }

    pub fn entropy() -> Self {
        Self::new("entropy", Space::Real(1))
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        match self.space {
            Space::Real(1) => Ok(()),
            Space::Real(n) => write!(f, "<R{n}>"),
            Space::Group(Convention::SemidirectProduct) => Ok(()),
            Space::Group(Convention::DirectProduct) => f.write_str("<direct>"),
            Space::CoAlgebra(Convention::SemidirectProduct) => f.write_str("<g*>"),
            Space::CoAlgebra(Convention::DirectProduct) => f.write_str("<g*:direct>"),
            Space::Subgroup(k) | Space::SubCoAlgebra(k) => write!(f, "<{}>", k.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown quantity `{0}`")]
pub struct UnknownQuantity(pub String);

impl FromStr for Quantity {
    type Err = UnknownQuantity;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || UnknownQuantity(s.to_string());
        let (name, arg) = match s.find('<') {
            Some(i) if s.ends_with('>') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(err()),
            None => (s, None),
        };
        let space = match (name, arg) {
            ("displacement" | "entropy" | "momentum", None) => Space::Real(1),
            ("displacement" | "entropy" | "momentum", Some(a)) if a.starts_with('R') => {
                let n: usize = a[1..].parse().map_err(|_| err())?;
                if n == 0 || n > 6 {
                    return Err(err());
                }
                Space::Real(n)
            }
            ("momentum", Some("g*")) => Space::CoAlgebra(Convention::SemidirectProduct),
            ("momentum", Some("g*:direct")) => Space::CoAlgebra(Convention::DirectProduct),
            ("momentum", Some(k)) => Space::SubCoAlgebra(JointKind::from_name(k).ok_or_else(err)?),
            ("pose", None) => Space::Group(Convention::SemidirectProduct),
            ("pose", Some("direct")) => Space::Group(Convention::DirectProduct),
            ("relative_pose", Some(k)) => Space::Subgroup(JointKind::from_name(k).ok_or_else(err)?),
            _ => return Err(err()),
        };
        Ok(Quantity::new(name, space))
    }
}

impl Serialize for Quantity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortKind {
    Power,
    State,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDecl {
    pub name: String,
    pub quantity: Quantity,
    pub kind: PortKind,
}

impl PortDecl {
    pub fn power(name: &str, quantity: Quantity) -> Self {
        Self { name: name.to_string(), quantity, kind: PortKind::Power }
    }

    pub fn state(name: &str, quantity: Quantity) -> Self {
        Self { name: name.to_string(), quantity, kind: PortKind::State }
    }
}

/// An ordered collection of ports.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Interface {
    pub ports: Vec<PortDecl>,
}

impl Interface {
    pub fn new(ports: Vec<PortDecl>) -> Self {
        Self { ports }
    }

    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.ports.iter().position(|p| p.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.ports.iter().map(|p| p.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.ports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ports.is_empty()
    }
}
