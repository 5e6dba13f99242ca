//! Lie-group kernel for rigid-body configurations.
//!
//! Poses are pairs `(R, r)` of a rotation matrix and a translation vector.
//! Two group structures are supported on the same underlying set:
//!
//! * [`Convention::DirectProduct`]: `SO(3) x R3`, translations compose by addition.
//! * [`Convention::SemidirectProduct`]: `SE(3) = SO(3) ⋉ R3`, the translation of the
//!   second factor is rotated by the first.
//!
//! Velocities are left-trivialized into [`Twist`]s `(ω, υ)` and forces or momenta
//! live in the dual space as [`Wrench`]es `(f_ω, f_υ)`, paired by the plain dot
//! product. Material (untrivialized) velocities and forces are carried by
//! [`MaterialTangent`] and [`MaterialCotangent`].

mod algebra;
mod error;
mod group;
pub mod so3;
mod tangent;

pub use algebra::{ad, ad_star, Twist, Wrench};
pub use error::GeomError;
pub use group::{right_jacobian_inv, Convention, GroupElement};
pub use tangent::{cotrivialize, left_trivialize, left_trivialize_unchecked, untrivialize, MaterialCotangent, MaterialTangent};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Vec6 = nalgebra::Vector6<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Mat6 = nalgebra::Matrix6<f64>;

/// Orthogonality and determinant tolerance for rotation matrices.
pub const ROTATION_TOL: f64 = 1e-9;

/// Tolerance used when checking skew-symmetry of a matrix.
pub const SKEW_TOL: f64 = 1e-9;

pub use so3::{hat, vee};
