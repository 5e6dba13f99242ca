use serde::{Deserialize, Serialize};

use crate::so3::{hat, skew_part, vee_unchecked};
use crate::{Convention, GeomError, GroupElement, Mat3, Twist, Vec3, Wrench, SKEW_TOL};

/// Material velocity `(Ṙ, ṙ)` at some base pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialTangent {
    pub d_rot: Mat3,
    pub d_trans: Vec3,
}

/// Material force covector `(F_R, F_r)`, paired with tangents by
/// `tr(F_Rᵀ Ṙ) + F_rᵀ ṙ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialCotangent {
    pub f_rot: Mat3,
    pub f_trans: Vec3,
}

impl MaterialTangent {
    pub fn new(d_rot: Mat3, d_trans: Vec3) -> Self {
        Self { d_rot, d_trans }
    }

    pub fn zero() -> Self {
        Self::new(Mat3::zeros(), Vec3::zeros())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.d_rot * s, self.d_trans * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.d_rot + o.d_rot, self.d_trans + o.d_trans)
    }
}

impl MaterialCotangent {
    pub fn new(f_rot: Mat3, f_trans: Vec3) -> Self {
        Self { f_rot, f_trans }
    }

    pub fn zero() -> Self {
        Self::new(Mat3::zeros(), Vec3::zeros())
    }

    pub fn pair(&self, v: &MaterialTangent) -> f64 {
        self.f_rot.component_mul(&v.d_rot).sum() + self.f_trans.dot(&v.d_trans)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.f_rot * s, self.f_trans * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.f_rot + o.f_rot, self.f_trans + o.f_trans)
    }
}

/// `T_q L_{q⁻¹}`: material velocity at `q` to its left-trivialized twist.
pub fn left_trivialize(q: &GroupElement, v: &MaterialTangent) -> Result<Twist, GeomError> {
    let w = q.rot.transpose() * v.d_rot;
    let deviation = (w + w.transpose()).abs().max();
    if !deviation.is_finite() {
        return Err(GeomError::NonFinite);
    }
    if deviation > SKEW_TOL * v.d_rot.abs().max().max(1.0) {
        return Err(GeomError::NotTangent { deviation });
    }
    Ok(left_trivialize_unchecked(q, v))
}

pub fn left_trivialize_unchecked(q: &GroupElement, v: &MaterialTangent) -> Twist {
    let rt = q.rot.transpose();
    let ang = vee_unchecked(&(rt * v.d_rot));
    let lin = match q.convention {
        Convention::DirectProduct => v.d_trans,
        Convention::SemidirectProduct => rt * v.d_trans,
    };
    Twist::new(ang, lin)
}

/// `T_e L_q`: left-trivialized twist to the material velocity at `q`.
pub fn untrivialize(q: &GroupElement, u: &Twist) -> MaterialTangent {
    let d_rot = q.rot * hat(&u.ang);
    let d_trans = match q.convention {
        Convention::DirectProduct => u.lin,
        Convention::SemidirectProduct => q.rot * u.lin,
    };
    MaterialTangent::new(d_rot, d_trans)
}

/// `T*_e L_q`: material force at `q` to its left-trivialized wrench, defined by
/// power invariance `⟨cotrivialize(q, F) | u⟩ = ⟨F | untrivialize(q, u)⟩`.
pub fn cotrivialize(q: &GroupElement, f: &MaterialCotangent) -> Wrench {
    let rt = q.rot.transpose();
    let ang = 2.0 * vee_unchecked(&skew_part(&(rt * f.f_rot)));
    let lin = match q.convention {
        Convention::DirectProduct => f.f_trans,
        Convention::SemidirectProduct => rt * f.f_trans,
    };
    Wrench::new(ang, lin)
}
