use std::fmt;
use std::ops::{Add, Neg, Sub};

use ephs_geom::{GroupElement, MaterialCotangent, MaterialTangent, Twist, Wrench};

/// Up to six real coordinates, stored inline.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Coords {
    len: u8,
    data: [f64; 6],
}

impl Coords {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= 6, "at most six coordinates");
        Self { len: len as u8, data: [0.0; 6] }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut c = Self::zeros(s.len());
        c.data[..s.len()].copy_from_slice(s);
        c
    }

    pub fn scalar(x: f64) -> Self {
        Self::from_slice(&[x])
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.len as usize]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data[..self.len as usize]
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.as_slice().iter().zip(o.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = *self;
        c.as_mut_slice().iter_mut().for_each(|x| *x *= s);
        c
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn twist(&self) -> Twist {
        Twist::from_slice(self.as_slice())
    }

    pub fn wrench(&self) -> Wrench {
        Wrench::from_slice(self.as_slice())
    }

    pub fn from_twist(t: &Twist) -> Self {
        Self::from_slice(&t.to_array())
    }

    pub fn from_wrench(w: &Wrench) -> Self {
        Self::from_slice(&w.to_array())
    }

    fn zip(&self, o: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len, o.len, "coordinate length mismatch");
        let mut c = *self;
        for (a, b) in c.as_mut_slice().iter_mut().zip(o.as_slice()) {
            *a = f(*a, *b);
        }
        c
    }
}

impl fmt::Debug for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Add for Coords {
    type Output = Coords;
    fn add(self, o: Coords) -> Coords {
        self.zip(&o, |a, b| a + b)
    }
}

impl Sub for Coords {
    type Output = Coords;
    fn sub(self, o: Coords) -> Coords {
        self.zip(&o, |a, b| a - b)
    }
}

impl Neg for Coords {
    type Output = Coords;
    fn neg(self) -> Coords {
        self.scale(-1.0)
    }
}

/// A port or junction variable. Vector-like quantities (reals, twists, wrenches,
/// subalgebra coordinates) use [`Value::Vector`]; the pose quantity uses the
/// material representations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Vector(Coords),
    Pose(GroupElement),
    Tangent(MaterialTangent),
    Cotangent(MaterialCotangent),
}

impl Value {
    pub fn vector(&self) -> Coords {
        match self {
            Value::Vector(c) => *c,
            other => panic!("expected coordinates, found {other:?}"),
        }
    }

    pub fn pose(&self) -> GroupElement {
        match self {
            Value::Pose(q) => *q,
            other => panic!("expected a pose, found {other:?}"),
        }
    }

    pub fn tangent(&self) -> MaterialTangent {
        match self {
            Value::Tangent(v) => *v,
            other => panic!("expected a material tangent, found {other:?}"),
        }
    }

    pub fn cotangent(&self) -> MaterialCotangent {
        match self {
            Value::Cotangent(f) => *f,
            other => panic!("expected a material cotangent, found {other:?}"),
        }
    }

    pub fn add(&self, o: &Value) -> Value {
        match (self, o) {
            (Value::Vector(a), Value::Vector(b)) => Value::Vector(*a + *b),
            (Value::Tangent(a), Value::Tangent(b)) => Value::Tangent(a.add(b)),
            (Value::Cotangent(a), Value::Cotangent(b)) => Value::Cotangent(a.add(b)),
            (a, b) => panic!("cannot add {a:?} and {b:?}"),
        }
    }

    pub fn scale(&self, s: f64) -> Value {
        match self {
            Value::Vector(a) => Value::Vector(a.scale(s)),
            Value::Tangent(a) => Value::Tangent(a.scale(s)),
            Value::Cotangent(a) => Value::Cotangent(a.scale(s)),
            Value::Pose(_) => panic!("cannot scale a pose"),
        }
    }

    /// Duality pairing of an effort with a flow.
    pub fn pair(effort: &Value, flow: &Value) -> f64 {
        match (effort, flow) {
            (Value::Vector(e), Value::Vector(f)) => e.dot(f),
            (Value::Cotangent(e), Value::Tangent(f)) => e.pair(f),
            (e, f) => panic!("cannot pair {e:?} with {f:?}"),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Value::Vector(c) => c.as_slice().iter().all(|x| x.is_finite()),
            Value::Pose(q) => q.rot.iter().chain(q.trans.iter()).all(|x| x.is_finite()),
            Value::Tangent(v) => v.d_rot.iter().chain(v.d_trans.iter()).all(|x| x.is_finite()),
            Value::Cotangent(f) => f.f_rot.iter().chain(f.f_trans.iter()).all(|x| x.is_finite()),
        }
    }
}
