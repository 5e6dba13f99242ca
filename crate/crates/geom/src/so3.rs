//! Rotation-group primitives: cross-product matrices, Rodrigues exponential,
//! logarithm and the SO(3) Jacobians.

use crate::{GeomError, Mat3, Vec3, SKEW_TOL};

/// Below this angle the exponential and logarithm switch to second-order Taylor forms.
pub const SMALL_ANGLE: f64 = 1e-8;

/// Angular distance from pi at which [`log`] refuses to answer.
pub const NEAR_PI: f64 = 1e-6;

/// Cross-product matrix: `hat(v) * w == v.cross(&w)`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. Fails if `s` deviates from skew-symmetry by more than [`SKEW_TOL`].
pub fn vee(s: &Mat3) -> Result<Vec3, GeomError> {
    let deviation = (s + s.transpose()).abs().max();
    if !deviation.is_finite() {
        return Err(GeomError::NonFinite);
    }
    if deviation > SKEW_TOL {
        return Err(GeomError::NotSkew { deviation });
    }
    Ok(vee_unchecked(s))
}

/// Axial vector of the skew part of `s`, without checking symmetry.
pub fn vee_unchecked(s: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (s[(2, 1)] - s[(1, 2)]),
        0.5 * (s[(0, 2)] - s[(2, 0)]),
        0.5 * (s[(1, 0)] - s[(0, 1)]),
    )
}

pub fn skew_part(a: &Mat3) -> Mat3 {
    0.5 * (a - a.transpose())
}

// Sum of the alternating series sum_k (-1)^k x^(2k) / (2k + m)!.
fn alt_series(theta: f64, m: u32) -> f64 {
    let t2 = theta * theta;
    let mut fact = 1.0;
    for i in 2..=m {
        fact *= i as f64;
    }
    let mut term = 1.0 / fact;
    let mut sum = 0.0;
    let mut k = 0u32;
    while k < 14 {
        sum += term;
        let a = (2 * k + m + 1) as f64;
        let b = (2 * k + m + 2) as f64;
        term *= -t2 / (a * b);
        k += 1;
    }
    sum
}

/// `sin(θ)/θ`.
pub fn sinc(theta: f64) -> f64 {
    if theta.abs() < SMALL_ANGLE {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    }
}

/// `(1 - cos θ)/θ²`, evaluated without cancellation.
pub fn cosc(theta: f64) -> f64 {
    if theta.abs() < SMALL_ANGLE {
        0.5 - theta * theta / 24.0
    } else {
        let s = (0.5 * theta).sin() / theta;
        2.0 * s * s
    }
}

/// `(θ - sin θ)/θ³`.
pub fn sin_defect3(theta: f64) -> f64 {
    if theta.abs() < 1.0 {
        alt_series(theta, 3)
    } else {
        (theta - theta.sin()) / theta.powi(3)
    }
}

/// `(θ²/2 + cos θ - 1)/θ⁴`.
pub fn cos_defect4(theta: f64) -> f64 {
    if theta.abs() < 1.0 {
        alt_series(theta, 4)
    } else {
        (0.5 * theta * theta + theta.cos() - 1.0) / theta.powi(4)
    }
}

/// `(θ - sin θ - θ³/6)/θ⁵`.
pub fn sin_defect5(theta: f64) -> f64 {
    if theta.abs() < 1.0 {
        -alt_series(theta, 5)
    } else {
        (theta - theta.sin() - theta.powi(3) / 6.0) / theta.powi(5)
    }
}

/// `(1 - (θ/2) cot(θ/2))/θ²`, the quadratic coefficient of the inverse Jacobian.
pub fn inv_jacobian_coeff(theta: f64) -> f64 {
    if theta.abs() < 0.1 {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0 + t2 * t2 * t2 / 1_209_600.0
    } else {
        let x = 0.5 * theta;
        (1.0 - x / x.tan()) / (theta * theta)
    }
}

/// Rodrigues formula.
pub fn exp(omega: &Vec3) -> Mat3 {
    let theta = omega.norm();
    let w = hat(omega);
    Mat3::identity() + sinc(theta) * w + cosc(theta) * w * w
}

/// Rotation vector of `r`. Refuses angles within [`NEAR_PI`] of pi.
pub fn log(r: &Mat3) -> Result<Vec3, GeomError> {
    let w = vee_unchecked(r);
    let sin = w.norm();
    let cos = (0.5 * (r.trace() - 1.0)).clamp(-1.0, 1.0);
    let theta = sin.atan2(cos);
    if !theta.is_finite() {
        return Err(GeomError::NonFinite);
    }
    if theta > std::f64::consts::PI - NEAR_PI {
        return Err(GeomError::NearPiSingularity { angle: theta });
    }
    if theta < SMALL_ANGLE {
        return Ok(w * (1.0 + theta * theta / 6.0));
    }
    if theta < 2.5 {
        return Ok(w * (theta / sin));
    }
    // sin θ is poorly conditioned here; read the axis off the symmetric part.
    let sym = 0.5 * (r + r.transpose()) - cos * Mat3::identity();
    let one_minus_cos = 1.0 - cos;
    let i = (0..3)
        .max_by(|&a, &b| sym[(a, a)].total_cmp(&sym[(b, b)]))
        .unwrap_or(0);
    let mut axis: Vec3 = sym.column(i) / (sym[(i, i)] * one_minus_cos).sqrt();
    if axis.dot(&w) < 0.0 {
        axis = -axis;
    }
    Ok(axis.normalize() * theta)
}

/// Left Jacobian of SO(3); also the translational `V` matrix of the SE(3) exponential.
pub fn left_jacobian(phi: &Vec3) -> Mat3 {
    let theta = phi.norm();
    let w = hat(phi);
    Mat3::identity() + cosc(theta) * w + sin_defect3(theta) * w * w
}

pub fn left_jacobian_inv(phi: &Vec3) -> Mat3 {
    let theta = phi.norm();
    let w = hat(phi);
    Mat3::identity() - 0.5 * w + inv_jacobian_coeff(theta) * w * w
}

/// Off-diagonal block of the SE(3) left Jacobian for `ξ = (φ, ρ)`.
pub fn se3_coupling(phi: &Vec3, rho: &Vec3) -> Mat3 {
    let theta = phi.norm();
    let p = hat(phi);
    let r = hat(rho);
    let pr = p * r;
    let rp = r * p;
    let prp = pr * p;
    let a = sin_defect3(theta);
    let b = cos_defect4(theta);
    let c = sin_defect5(theta);
    0.5 * r + a * (pr + rp + prp) + b * (p * pr + rp * p - 3.0 * prp) + 0.5 * (b + 3.0 * c) * (prp * p + p * prp)
}
