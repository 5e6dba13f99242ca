use ephs_core::JointKind;
use ephs_geom::{Convention, GroupElement, Twist, Vec3, Wrench};
use nalgebra::{DMatrix, DVector};

use crate::error::ComponentError;
use crate::value::Coords;

const SEMI: Convention = Convention::SemidirectProduct;

/// A lower kinematic pair: the subalgebra basis `B` (columns are the inclusion
/// `i` of joint coordinates into twists) and its pseudo-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGeometry {
    pub kind: JointKind,
    basis: Vec<Twist>,
    pinv: DMatrix<f64>,
}

fn unit(axis: &Vec3) -> Result<Vec3, ComponentError> {
    let n = axis.norm();
    if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
        return Err(ComponentError::BadAxis { norm: n });
    }
    Ok(*axis)
}

fn rot(a: Vec3) -> Twist {
    Twist::new(a, Vec3::zeros())
}

fn trans(a: Vec3) -> Twist {
    Twist::new(Vec3::zeros(), a)
}

impl JointGeometry {
    fn from_basis(kind: JointKind, basis: Vec<Twist>) -> Self {
        let b = Self::matrix_of(&basis);
        let pinv = b.clone().pseudo_inverse(1e-12).expect("basis has full column rank");
        Self { kind, basis, pinv }
    }

    fn matrix_of(basis: &[Twist]) -> DMatrix<f64> {
        DMatrix::from_fn(6, basis.len(), |r, c| basis[c].to_array()[r])
    }

    pub fn revolute(axis: Vec3) -> Result<Self, ComponentError> {
        Ok(Self::from_basis(JointKind::Revolute, vec![rot(unit(&axis)?)]))
    }

    pub fn prismatic(axis: Vec3) -> Result<Self, ComponentError> {
        Ok(Self::from_basis(JointKind::Prismatic, vec![trans(unit(&axis)?)]))
    }

    pub fn screw(axis: Vec3, pitch: f64) -> Result<Self, ComponentError> {
        let a = unit(&axis)?;
        if !pitch.is_finite() {
            return Err(ComponentError::BadParam { name: "pitch".into(), reason: "must be finite".into() });
        }
        Ok(Self::from_basis(JointKind::Screw, vec![Twist::new(a, pitch * a)]))
    }

    pub fn cylindrical(axis: Vec3) -> Result<Self, ComponentError> {
        let a = unit(&axis)?;
        Ok(Self::from_basis(JointKind::Cylindrical, vec![rot(a), trans(a)]))
    }

    /// Rotation about `normal` and the two translations in the plane.
    pub fn planar(normal: Vec3) -> Result<Self, ComponentError> {
        let n = unit(&normal)?;
        let e = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vec3::x()
        } else if n.y.abs() <= n.z.abs() {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let t1 = n.cross(&e).normalize();
        let t2 = n.cross(&t1);
        Ok(Self::from_basis(JointKind::Planar, vec![rot(n), trans(t1), trans(t2)]))
    }

    pub fn spherical() -> Self {
        Self::from_basis(JointKind::Spherical, vec![rot(Vec3::x()), rot(Vec3::y()), rot(Vec3::z())])
    }

    /// Builds a joint of the given kind; `axis` is the rotation/translation axis or
    /// the plane normal, and is ignored for spherical joints.
    pub fn new(kind: JointKind, axis: Vec3, pitch: f64) -> Result<Self, ComponentError> {
        match kind {
            JointKind::Spherical => Ok(Self::spherical()),
            JointKind::Planar => Self::planar(axis),
            JointKind::Cylindrical => Self::cylindrical(axis),
            JointKind::Revolute => Self::revolute(axis),
            JointKind::Prismatic => Self::prismatic(axis),
            JointKind::Screw => Self::screw(axis, pitch),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Twist] {
        &self.basis
    }

    /// The 6×k matrix `B`.
    pub fn matrix(&self) -> DMatrix<f64> {
        Self::matrix_of(&self.basis)
    }

    /// `i(c) = B c`.
    pub fn include(&self, c: &Coords) -> Twist {
        assert_eq!(c.len(), self.dim());
        self.basis.iter().zip(c.as_slice()).fold(Twist::zero(), |acc, (b, x)| acc + *x * *b)
    }

    /// `i*(f) = Bᵀ f`.
    pub fn restrict(&self, f: &Wrench) -> Coords {
        let v: Vec<f64> = self.basis.iter().map(|b| f.pair(b)).collect();
        Coords::from_slice(&v)
    }

    /// Least-squares joint coordinates of a twist, `B⁺ ξ`.
    pub fn coords_of(&self, xi: &Twist) -> Coords {
        let v = &self.pinv * DVector::from_column_slice(&xi.to_array());
        Coords::from_slice(v.as_slice())
    }

    /// `exp(B c)`, an element of the joint subgroup.
    pub fn exp(&self, c: &Coords) -> GroupElement {
        GroupElement::exp(&self.include(c), SEMI)
    }

    /// Joint coordinates `B⁺ log(q)` of a relative pose.
    pub fn coords(&self, q: &GroupElement) -> Result<Coords, ComponentError> {
        let xi = q.log().map_err(|e| ComponentError::BadState(e.to_string()))?;
        Ok(self.coords_of(&xi))
    }

    /// Distance of `log(q)` from the subalgebra, `‖(E − B B⁺) log q‖`.
    pub fn membership_error(&self, q: &GroupElement) -> Result<f64, ComponentError> {
        let xi = q.log().map_err(|e| ComponentError::BadState(e.to_string()))?;
        Ok((xi - self.include(&self.coords_of(&xi))).norm())
    }
}
