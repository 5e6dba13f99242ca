use serde::{Deserialize, Serialize};

use crate::so3;
use crate::{GeomError, Mat3, Mat6, Twist, Vec3, Wrench, ROTATION_TOL};

/// Group structure placed on `SO(3) x R3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Convention {
    DirectProduct,
    SemidirectProduct,
}

/// A pose `(R, r)` under a fixed [`Convention`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub rot: Mat3,
    pub trans: Vec3,
    pub convention: Convention,
}

impl GroupElement {
    /// Builds a pose, checking that `rot` is a proper rotation to [`ROTATION_TOL`].
    pub fn new(rot: Mat3, trans: Vec3, convention: Convention) -> Result<Self, GeomError> {
        let q = Self::from_parts(rot, trans, convention);
        q.check()?;
        Ok(q)
    }

    pub fn from_parts(rot: Mat3, trans: Vec3, convention: Convention) -> Self {
        Self { rot, trans, convention }
    }

    pub fn identity(convention: Convention) -> Self {
        Self::from_parts(Mat3::identity(), Vec3::zeros(), convention)
    }

    pub fn from_translation(trans: Vec3, convention: Convention) -> Self {
        Self::from_parts(Mat3::identity(), trans, convention)
    }

    pub fn from_rotation(rot: Mat3, convention: Convention) -> Self {
        Self::from_parts(rot, Vec3::zeros(), convention)
    }

    /// `‖RᵀR − E‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        (self.rot.transpose() * self.rot - Mat3::identity()).norm()
    }

    pub fn check(&self) -> Result<(), GeomError> {
        if !self.rot.iter().chain(self.trans.iter()).all(|x| x.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        let orthogonality = self.orthogonality_error();
        let det = self.rot.determinant();
        if orthogonality > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(GeomError::NotRotation { orthogonality, det });
        }
        Ok(())
    }

    fn same_convention(&self, other: &Self) -> Result<(), GeomError> {
        if self.convention != other.convention {
            return Err(GeomError::ConventionMismatch {
                left: self.convention,
                right: other.convention,
            });
        }
        Ok(())
    }

    pub fn compose(&self, other: &Self) -> Result<Self, GeomError> {
        self.same_convention(other)?;
        Ok(self.mul(other))
    }

    // Composition for operands already known to share a convention.
    pub(crate) fn mul(&self, other: &Self) -> Self {
        let trans = match self.convention {
            Convention::DirectProduct => self.trans + other.trans,
            Convention::SemidirectProduct => self.trans + self.rot * other.trans,
        };
        Self::from_parts(self.rot * other.rot, trans, self.convention)
    }

    /// Composition that panics on a convention mismatch; for internal code paths
    /// where both operands come from the same model.
    pub fn then(&self, other: &Self) -> Self {
        assert_eq!(self.convention, other.convention, "convention mismatch");
        self.mul(other)
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rot.transpose();
        let trans = match self.convention {
            Convention::DirectProduct => -self.trans,
            Convention::SemidirectProduct => -(rt * self.trans),
        };
        Self::from_parts(rt, trans, self.convention)
    }

    /// Group exponential of a twist.
    pub fn exp(xi: &Twist, convention: Convention) -> Self {
        let rot = so3::exp(&xi.ang);
        let trans = match convention {
            Convention::DirectProduct => xi.lin,
            Convention::SemidirectProduct => so3::left_jacobian(&xi.ang) * xi.lin,
        };
        Self::from_parts(rot, trans, convention)
    }

    /// Cayley retraction `(E − X/2)⁻¹(E + X/2)` of a twist, in homogeneous form for
    /// the semidirect product. Rotation angle is `2·atan(|ω|/2)`.
    pub fn cay(xi: &Twist, convention: Convention) -> Self {
        let a = 0.5 * xi.ang;
        let n = 1.0 + a.norm_squared();
        let ah = so3::hat(&a);
        let rot = Mat3::identity() + (2.0 / n) * (ah + ah * ah);
        let trans = match convention {
            Convention::DirectProduct => xi.lin,
            Convention::SemidirectProduct => {
                // (E − â)⁻¹ = (E + â + aaᵀ)/(1 + |a|²)
                (xi.lin + a.cross(&xi.lin) + a * a.dot(&xi.lin)) / n
            }
        };
        Self::from_parts(rot, trans, convention)
    }

    /// Group logarithm; the rotation angle must stay below `π − 1e-6`.
    pub fn log(&self) -> Result<Twist, GeomError> {
        let ang = so3::log(&self.rot)?;
        let lin = match self.convention {
            Convention::DirectProduct => self.trans,
            Convention::SemidirectProduct => so3::left_jacobian_inv(&ang) * self.trans,
        };
        Ok(Twist::new(ang, lin))
    }

    /// Adjoint action `Ad_q(u)`.
    pub fn adjoint(&self, u: &Twist) -> Twist {
        let ang = self.rot * u.ang;
        match self.convention {
            Convention::DirectProduct => Twist::new(ang, u.lin),
            Convention::SemidirectProduct => {
                Twist::new(ang, self.rot * u.lin - ang.cross(&self.trans))
            }
        }
    }

    /// Coadjoint action `Ad*_q(f)`, dual to [`GroupElement::adjoint`].
    pub fn coadjoint(&self, f: &Wrench) -> Wrench {
        let rt = self.rot.transpose();
        match self.convention {
            Convention::DirectProduct => Wrench::new(rt * f.ang, f.lin),
            Convention::SemidirectProduct => {
                Wrench::new(rt * (f.ang - self.trans.cross(&f.lin)), rt * f.lin)
            }
        }
    }

    /// Matrix of `Ad_q` acting on `(ω, υ)` coordinates.
    pub fn adjoint_matrix(&self) -> Mat6 {
        let mut m = Mat6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rot);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rot);
        if self.convention == Convention::SemidirectProduct {
            m.fixed_view_mut::<3, 3>(3, 0)
                .copy_from(&(so3::hat(&self.trans) * self.rot));
        }
        m
    }

    /// Largest absolute entry difference of rotation and translation.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.rot - other.rot)
            .abs()
            .max()
            .max((self.trans - other.trans).abs().max())
    }
}

/// Inverse right Jacobian of the exponential: `log(exp(ξ) exp(εη)) = ξ + ε J⁻¹ η + O(ε²)`.
pub fn right_jacobian_inv(convention: Convention, xi: &Twist) -> Mat6 {
    // J_r(ξ) = J_l(−ξ)
    let phi = -xi.ang;
    let rho = -xi.lin;
    let jinv = so3::left_jacobian_inv(&phi);
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&jinv);
    match convention {
        Convention::DirectProduct => {
            m.fixed_view_mut::<3, 3>(3, 3).copy_from(&Mat3::identity());
        }
        Convention::SemidirectProduct => {
            let q = so3::se3_coupling(&phi, &rho);
            m.fixed_view_mut::<3, 3>(3, 3).copy_from(&jinv);
            m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-jinv * q * jinv));
        }
    }
    m
}
