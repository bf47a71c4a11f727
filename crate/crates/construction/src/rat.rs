//! Exact rational bookkeeping for tower centers.
//!
//! Centers are propagated through the shear dynamics symbolically, never by
//! numerical orbit integration, so disjointness and periodicity checks are
//! exact.  Serialized as "num/den" strings to keep artifacts bit-stable.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Q = Ratio<i128>;

/// Rational with stable string serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rat(pub Q);

impl Rat {
    pub fn new(num: i128, den: i128) -> Self {
        Rat(Ratio::new(num, den))
    }

    pub fn from_int(n: i128) -> Self {
        Rat(Ratio::from_integer(n))
    }

    pub fn to_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Reduce into `[0, modulus)`.
    pub fn rem_euclid(self, modulus: Q) -> Self {
        let mut r = self.0 % modulus;
        if r.is_negative() {
            r += modulus;
        }
        Rat(r)
    }

    /// Shortest representative of the difference on a circle of the given
    /// circumference.
    pub fn circle_delta(self, other: Rat, circumference: Q) -> Rat {
        let mut d = (other.0 - self.0) % circumference;
        if d.is_negative() {
            d += circumference;
        }
        if d > circumference / 2 {
            d -= circumference;
        }
        Rat(d)
    }

    pub fn abs(self) -> Rat {
        Rat(self.0.abs())
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }
}

impl std::ops::Add for Rat {
    type Output = Rat;
    fn add(self, rhs: Rat) -> Rat {
        Rat(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Rat {
    type Output = Rat;
    fn sub(self, rhs: Rat) -> Rat {
        Rat(self.0 - rhs.0)
    }
}

impl std::ops::Mul for Rat {
    type Output = Rat;
    fn mul(self, rhs: Rat) -> Rat {
        Rat(self.0 * rhs.0)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", self.0.numer(), self.0.denom()))
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        let (n, den) = raw
            .split_once('/')
            .ok_or_else(|| D::Error::custom(format!("bad rational `{raw}`")))?;
        Ok(Rat(Ratio::new(
            n.parse().map_err(D::Error::custom)?,
            den.parse().map_err(D::Error::custom)?,
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_delta_takes_shorter_arc() {
        let circ = Q::from_integer(1);
        let a = Rat::new(1, 20);
        let b = Rat::new(19, 20);
        assert_eq!(a.circle_delta(b, circ), Rat::new(-1, 10));
    }

    #[test]
    fn serde_round_trip() {
        let r = Rat::new(-7, 12);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, "\"-7/12\"");
        let back: Rat = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
