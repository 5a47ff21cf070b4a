//! Fixed-capacity spatial vectors for planar and spatial engagements.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A vector in R^2 or R^3.
///
/// The dimension is carried with the value; arithmetic between vectors of
/// different dimension is a logic error and panics in debug builds.
#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    dim: u8,
    c: [f64; 3],
}

impl Vector {
    pub const fn new2(x: f64, y: f64) -> Self {
        Self { dim: 2, c: [x, y, 0.0] }
    }

    pub const fn new3(x: f64, y: f64, z: f64) -> Self {
        Self { dim: 3, c: [x, y, z] }
    }

    /// Zero vector of the given dimension (2 or 3).
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3, got {dim}");
        Self { dim: dim as u8, c: [0.0; 3] }
    }

    /// Builds a vector from a slice of length 2 or 3.
    pub fn from_slice(values: &[f64]) -> Option<Self> {
        match *values {
            [x, y] => Some(Self::new2(x, y)),
            [x, y, z] => Some(Self::new3(x, y, z)),
            _ => None,
        }
    }

    /// Unit vector at angle `theta` in the plane.
    pub fn polar(theta: f64) -> Self {
        Self::new2(theta.cos(), theta.sin())
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim as usize]
    }

    pub fn x(&self) -> f64 {
        self.c[0]
    }

    pub fn y(&self) -> f64 {
        self.c[1]
    }

    pub fn z(&self) -> f64 {
        self.c[2]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.c[0] * other.c[0] + self.c[1] * other.c[1] + self.c[2] * other.c[2]
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        match self.dim {
            2 => self.c[0].hypot(self.c[1]),
            _ => self.norm_squared().sqrt(),
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    /// Cross product; planar vectors are lifted to z = 0.
    pub fn cross(&self, other: &Self) -> Self {
        let [a1, a2, a3] = self.c;
        let [b1, b2, b3] = other.c;
        Self::new3(a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1)
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > f64::MIN_POSITIVE && n.is_finite()).then(|| *self / n)
    }

    /// Rescales so the norm does not exceed `bound`; direction is preserved.
    pub fn clamp_norm(&self, bound: f64) -> Self {
        let n = self.norm();
        if n > bound {
            *self * (bound / n)
        } else {
            *self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }

    /// Planar heading angle `atan2(y, x)`.
    pub fn heading(&self) -> f64 {
        self.c[1].atan2(self.c[0])
    }
}

impl Default for Vector {
    fn default() -> Self {
        Self::zeros(2)
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.as_slice().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl Add for Vector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        Self {
            dim: self.dim,
            c: [self.c[0] + rhs.c[0], self.c[1] + rhs.c[1], self.c[2] + rhs.c[2]],
        }
    }
}

impl AddAssign for Vector {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for Vector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        Self {
            dim: self.dim,
            c: [self.c[0] - rhs.c[0], self.c[1] - rhs.c[1], self.c[2] - rhs.c[2]],
        }
    }
}

impl Mul<f64> for Vector {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self {
            dim: self.dim,
            c: [self.c[0] * k, self.c[1] * k, self.c[2] * k],
        }
    }
}

impl Div<f64> for Vector {
    type Output = Self;
    fn div(self, k: f64) -> Self {
        Self {
            dim: self.dim,
            c: [self.c[0] / k, self.c[1] / k, self.c[2] / k],
        }
    }
}

impl Neg for Vector {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        Self::from_slice(&values).ok_or_else(|| {
            D::Error::custom(format!(
                "expected a vector with 2 or 3 components, got {}",
                values.len()
            ))
        })
    }
}
