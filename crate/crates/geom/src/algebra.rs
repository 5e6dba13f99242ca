use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Convention, Vec3, Vec6};

/// Left-trivialized velocity `(ω, υ)`: angular part first.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub ang: Vec3,
    pub lin: Vec3,
}

/// Element of the dual algebra: torque/force or angular/linear momentum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub ang: Vec3,
    pub lin: Vec3,
}

macro_rules! six_vector {
    ($t:ident) => {
        impl $t {
            pub fn new(ang: Vec3, lin: Vec3) -> Self {
                Self { ang, lin }
            }

            pub fn zero() -> Self {
                Self::default()
            }

            pub fn from_slice(s: &[f64]) -> Self {
                Self {
                    ang: Vec3::new(s[0], s[1], s[2]),
                    lin: Vec3::new(s[3], s[4], s[5]),
                }
            }

            pub fn to_array(&self) -> [f64; 6] {
                [self.ang.x, self.ang.y, self.ang.z, self.lin.x, self.lin.y, self.lin.z]
            }

            pub fn to_vec6(&self) -> Vec6 {
                Vec6::from_row_slice(&self.to_array())
            }

            pub fn from_vec6(v: &Vec6) -> Self {
                Self::from_slice(v.as_slice())
            }

            pub fn norm(&self) -> f64 {
                (self.ang.norm_squared() + self.lin.norm_squared()).sqrt()
            }

            pub fn is_finite(&self) -> bool {
                self.ang.iter().chain(self.lin.iter()).all(|x| x.is_finite())
            }
        }

        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t {
                $t::new(self.ang + o.ang, self.lin + o.lin)
            }
        }

        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t {
                $t::new(self.ang - o.ang, self.lin - o.lin)
            }
        }

        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                $t::new(-self.ang, -self.lin)
            }
        }

        impl Mul<$t> for f64 {
            type Output = $t;
            fn mul(self, o: $t) -> $t {
                $t::new(self * o.ang, self * o.lin)
            }
        }
    };
}

six_vector!(Twist);
six_vector!(Wrench);

impl Wrench {
    /// Duality pairing `f_ωᵀω + f_υᵀυ`.
    pub fn pair(&self, u: &Twist) -> f64 {
        self.ang.dot(&u.ang) + self.lin.dot(&u.lin)
    }
}

/// Lie bracket `ad_{u1}(u2)`.
pub fn ad(convention: Convention, u1: &Twist, u2: &Twist) -> Twist {
    let ang = u1.ang.cross(&u2.ang);
    match convention {
        Convention::DirectProduct => Twist::new(ang, Vec3::zeros()),
        Convention::SemidirectProduct => {
            Twist::new(ang, u1.ang.cross(&u2.lin) - u2.ang.cross(&u1.lin))
        }
    }
}

/// Dual of `ad_u`: `⟨ad_star(u, p) | w⟩ = ⟨p | ad(u, w)⟩`.
pub fn ad_star(convention: Convention, u: &Twist, p: &Wrench) -> Wrench {
    match convention {
        Convention::DirectProduct => Wrench::new(p.ang.cross(&u.ang), Vec3::zeros()),
        Convention::SemidirectProduct => Wrench::new(
            p.ang.cross(&u.ang) + p.lin.cross(&u.lin),
            p.lin.cross(&u.ang),
        ),
    }
}
