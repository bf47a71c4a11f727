//! Shear along a fixed direction with a profile read off one coordinate:
//! `p ↦ p + profile(p[axis]) · v`.  Volume preserving whenever
//! `v[axis] == 0`, since the Jacobian is `I + v · ∇profileᵀ` with a zero
//! diagonal coupling.

use nalgebra::{DMatrix, DVector};
use serde_json::Value;

use super::{ambient_from_json, u64_from_json, vec_from_json};
use crate::ambient::{Ambient, Point};
use crate::error::{MapError, Result};
use crate::expr::{MapExpr, MapNode};
use crate::smoothstep::Profile;

#[derive(Debug)]
pub struct Shear {
    ambient: Ambient,
    profile: Profile,
    axis: usize,
    v: Vec<f64>,
}

pub fn shear(ambient: Ambient, profile: Profile, axis: usize, v: Vec<f64>) -> Result<MapExpr> {
    if axis >= ambient.dim() || v.len() != ambient.dim() {
        return Err(MapError::BadParams("shear axis/vector incompatible with ambient".into()));
    }
    if v[axis] != 0.0 {
        return Err(MapError::BadParams("shear direction must not feed back into its profile axis".into()));
    }
    Ok(MapExpr::from_node(Shear { ambient, profile, axis, v }))
}

impl MapNode for Shear {
    fn kind(&self) -> &'static str {
        "shear"
    }
    fn source(&self) -> Ambient {
        self.ambient
    }
    fn target(&self) -> Ambient {
        self.ambient
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        let amp = self.profile.value(p.coords[self.axis]);
        let coords = p.coords.iter().zip(&self.v).map(|(c, w)| c + amp * w).collect();
        Point::new(coords, self.ambient)
    }
    fn invert(&self) -> Result<MapExpr> {
        // the profile coordinate is untouched, so subtracting the same
        // displacement is the exact inverse
        let neg = self.v.iter().map(|w| -w).collect();
        shear(self.ambient, self.profile.clone(), self.axis, neg)
    }
    fn jacobian_closed(&self, p: &Point) -> Option<DMatrix<f64>> {
        let n = p.dim();
        let slope = self.profile.deriv(p.coords[self.axis], 1);
        let mut j = DMatrix::identity(n, n);
        let v = DVector::from_vec(self.v.clone());
        for r in 0..n {
            j[(r, self.axis)] += slope * v[r];
        }
        Some(j)
    }
    fn params(&self) -> Value {
        serde_json::json!({
            "ambient": self.ambient,
            "profile": self.profile,
            "axis": self.axis,
            "v": self.v,
        })
    }
}

pub(crate) fn build_shear(params: &Value, _ch: Vec<MapExpr>) -> Result<MapExpr> {
    let profile: Profile = serde_json::from_value(
        params.get("profile").cloned().ok_or_else(|| MapError::BadParams("missing `profile`".into()))?,
    )
    .map_err(|e| MapError::BadParams(e.to_string()))?;
    shear(
        ambient_from_json(params, "ambient")?,
        profile,
        u64_from_json(params, "axis")? as usize,
        vec_from_json(params, "v")?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump_q4_a32() -> Profile {
        let q = 4.0f64;
        Profile::PlateauBump {
            amplitude: 1.0 / 32.0,
            z0: 0.2 / q,
            z1: 0.3 / q,
            z2: 0.7 / q,
            z3: 0.8 / q,
            width: 1.0 / q,
            order: 5,
        }
    }

    #[test]
    fn plateau_point_moves_by_amplitude() {
        // (0.125, 0.3) ↦ (0.125, 0.33125) for q = 4, A = 32
        let amb = Ambient::LongFatTorus { d: 2, q: 4 };
        let s = shear(amb, bump_q4_a32(), 0, vec![0.0, 1.0]).unwrap();
        let p = Point::new(vec![0.125, 0.3], amb).unwrap();
        let q = s.eval(&p).unwrap();
        assert_eq!(q.coords[0], 0.125);
        assert!((q.coords[1] - 0.33125).abs() < 1e-15);
    }

    #[test]
    fn outside_support_is_fixed() {
        let amb = Ambient::LongFatTorus { d: 2, q: 4 };
        let s = shear(amb, bump_q4_a32(), 0, vec![0.0, 1.0]).unwrap();
        let p = Point::new(vec![0.01 / 4.0, 0.7], amb).unwrap();
        let q = s.eval(&p).unwrap();
        assert_eq!(q.coords, p.coords);
    }

    #[test]
    fn third_coordinate_rides_the_same_profile() {
        // d = 3: plateau point gains 1/32 in y and (1/32)·(1/128) in z
        let amb = Ambient::LongFatTorus { d: 3, q: 4 };
        let v = vec![0.0, 1.0, 1.0 / 128.0];
        let s = shear(amb, bump_q4_a32(), 0, v).unwrap();
        let p = Point::new(vec![0.125, 0.3, 0.5], amb).unwrap();
        let q = s.eval(&p).unwrap();
        assert!((q.coords[1] - 0.33125).abs() < 1e-15);
        assert!((q.coords[2] - (0.5 + 1.0 / (32.0 * 128.0))).abs() < 1e-15);
    }

    #[test]
    fn round_trip() {
        let amb = Ambient::LongFatTorus { d: 2, q: 4 };
        let s = shear(amb, bump_q4_a32(), 0, vec![0.0, 1.0]).unwrap();
        let sinv = s.invert().unwrap();
        for i in 0..50 {
            let x = 0.002 + 0.246 * (i as f64) / 49.0;
            let p = Point::new(vec![x, 0.37 * i as f64 % 4.0], amb).unwrap();
            let rt = sinv.eval(&s.eval(&p).unwrap()).unwrap();
            assert!(p.distance(&rt) <= 1e-12);
        }
    }
}
