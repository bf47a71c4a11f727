//! Per-block localized rotation on the fat torus.
//!
//! The fat torus splits into q blocks `[0,1] × [k/q,(k+1)/q]` (times
//! `T^{d-2}`).  In block-normalized coordinates `(ξ, η) = (x, q·y − k)` the
//! node rotates about the block center `(1/2, 1/2)` by an angle that equals
//! `π/2` on the disc `ρ ≤ rho_rigid` and dies smoothly before
//! `ρ = rho_support < 1/2`.  Conjugating the twist by the (linear)
//! normalization keeps the determinant exactly 1, and the support stays
//! clear of the walls and the block seams, so the global map is smooth and
//! commutes with the `1/q`-shift exactly.

use nalgebra::DMatrix;
use serde_json::Value;

use super::{f64_from_json, u64_from_json};
use crate::ambient::{Ambient, Point};
use crate::error::{MapError, Result};
use crate::expr::{MapExpr, MapNode};
use crate::smoothstep::SmoothStep;

#[derive(Debug, Clone)]
pub struct BlockTwist {
    d: usize,
    q: u32,
    rho_rigid: f64,
    rho_support: f64,
    step: SmoothStep,
    /// +1 rotates by +π/2 in (ξ, η), -1 is the inverse twist.
    direction: f64,
}

pub fn block_twist(d: usize, q: u32, rho_rigid: f64, rho_support: f64, order: usize) -> Result<MapExpr> {
    new_twist(d, q, rho_rigid, rho_support, order, 1.0)
}

fn new_twist(d: usize, q: u32, rho_rigid: f64, rho_support: f64, order: usize, direction: f64) -> Result<MapExpr> {
    if !(0.0 < rho_rigid && rho_rigid < rho_support && rho_support < 0.5) {
        return Err(MapError::BadParams(format!(
            "need 0 < rho_rigid < rho_support < 1/2, got {rho_rigid}, {rho_support}"
        )));
    }
    if d < 2 || q < 2 {
        return Err(MapError::BadParams("block twist needs d >= 2, q >= 2".into()));
    }
    Ok(MapExpr::from_node(BlockTwist {
        d,
        q,
        rho_rigid,
        rho_support,
        step: SmoothStep::new(order),
        direction,
    }))
}

impl BlockTwist {
    /// Rotation angle as a function of the normalized block radius.
    fn angle(&self, rho: f64) -> f64 {
        let f = if rho <= self.rho_rigid {
            1.0
        } else if rho >= self.rho_support {
            0.0
        } else {
            self.step.value((self.rho_support - rho) / (self.rho_support - self.rho_rigid))
        };
        self.direction * std::f64::consts::FRAC_PI_2 * f
    }

    fn angle_slope(&self, rho: f64) -> f64 {
        if rho <= self.rho_rigid || rho >= self.rho_support {
            return 0.0;
        }
        let w = self.rho_support - self.rho_rigid;
        -self.direction * std::f64::consts::FRAC_PI_2 * self.step.deriv((self.rho_support - rho) / w, 1) / w
    }

    /// Block index and normalized offsets (u, v) from the block center.
    fn normalized(&self, p: &Point) -> (usize, f64, f64, f64) {
        let qf = self.q as f64;
        let mut k = (p.coords[1] * qf).floor();
        if k >= qf {
            k = qf - 1.0; // y == 1-eps rounding guard; y is stored in [0,1)
        }
        let u = p.coords[0] - 0.5;
        let v = qf * p.coords[1] - k - 0.5;
        (k as usize, u, v, (u * u + v * v).sqrt())
    }
}

impl MapNode for BlockTwist {
    fn kind(&self) -> &'static str {
        "block_twist"
    }
    fn source(&self) -> Ambient {
        Ambient::FatTorus { d: self.d }
    }
    fn target(&self) -> Ambient {
        Ambient::FatTorus { d: self.d }
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        let (k, u, v, rho) = self.normalized(p);
        if rho >= self.rho_support {
            return Ok(p.clone());
        }
        let th = self.angle(rho);
        let (s, c) = th.sin_cos();
        let (u2, v2) = (c * u - s * v, s * u + c * v);
        let mut coords = p.coords.clone();
        coords[0] = u2 + 0.5;
        coords[1] = (k as f64 + v2 + 0.5) / self.q as f64;
        Point::new(coords, self.source())
    }
    fn invert(&self) -> Result<MapExpr> {
        // the block radius is invariant, so the opposite twist is exact
        Ok(MapExpr::from_node(BlockTwist { direction: -self.direction, ..self.clone() }))
    }
    fn jacobian_closed(&self, p: &Point) -> Option<DMatrix<f64>> {
        let (_, u, v, rho) = self.normalized(p);
        let mut j = DMatrix::identity(self.d, self.d);
        if rho >= self.rho_support {
            return Some(j);
        }
        let th = self.angle(rho);
        let (s, c) = th.sin_cos();
        // D(u,v) rotation plus the rank-one angle-gradient term
        let mut j2 = [[c, -s], [s, c]];
        if rho > 0.0 {
            let slope = self.angle_slope(rho);
            let (du, dv) = (u / rho, v / rho);
            let (au, av) = (-s * u - c * v, c * u - s * v); // dRot/dθ · (u,v)
            j2[0][0] += slope * au * du;
            j2[0][1] += slope * au * dv;
            j2[1][0] += slope * av * du;
            j2[1][1] += slope * av * dv;
        }
        // chain with (ξ, η) = (x, q·y - k)
        let qf = self.q as f64;
        j[(0, 0)] = j2[0][0];
        j[(0, 1)] = j2[0][1] * qf;
        j[(1, 0)] = j2[1][0] / qf;
        j[(1, 1)] = j2[1][1];
        Some(j)
    }
    fn params(&self) -> Value {
        serde_json::json!({
            "d": self.d,
            "q": self.q,
            "rho_rigid": self.rho_rigid,
            "rho_support": self.rho_support,
            "order": self.step.order,
            "direction": self.direction,
        })
    }
}

pub(crate) fn build_block_twist(params: &Value, _ch: Vec<MapExpr>) -> Result<MapExpr> {
    new_twist(
        u64_from_json(params, "d")? as usize,
        u64_from_json(params, "q")? as u32,
        f64_from_json(params, "rho_rigid")?,
        f64_from_json(params, "rho_support")?,
        u64_from_json(params, "order")? as usize,
        f64_from_json(params, "direction")?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_core_rotates_exactly() {
        let tw = block_twist(2, 4, 0.42, 0.495, 5).unwrap();
        let amb = Ambient::FatTorus { d: 2 };
        // normalized (0.5, 0.2): offset (0, -0.3) ↦ (0.3, 0): lands at (0.8, 0.125)
        let p = Point::new(vec![0.5, 0.05], amb).unwrap();
        let q = tw.eval(&p).unwrap();
        assert!((q.coords[0] - 0.8).abs() < 1e-15);
        assert!((q.coords[1] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn identity_outside_support() {
        let tw = block_twist(2, 4, 0.42, 0.495, 5).unwrap();
        let amb = Ambient::FatTorus { d: 2 };
        // block corner region, normalized radius > 0.495
        let p = Point::new(vec![0.002, 0.002], amb).unwrap();
        assert_eq!(tw.eval(&p).unwrap().coords, p.coords);
    }

    #[test]
    fn commutes_with_block_shift() {
        let tw = block_twist(2, 4, 0.42, 0.495, 5).unwrap();
        let amb = Ambient::FatTorus { d: 2 };
        for i in 0..40 {
            let p = Point::new(vec![0.13 + 0.019 * i as f64, (0.083 * i as f64) % 1.0], amb).unwrap();
            let shifted = Point::new(vec![p.coords[0], p.coords[1] + 0.25], amb).unwrap();
            let a = tw.eval(&shifted).unwrap();
            let b = tw.eval(&p).unwrap();
            let b_shifted = Point::new(vec![b.coords[0], b.coords[1] + 0.25], amb).unwrap();
            assert!(a.distance(&b_shifted) <= 1e-15);
        }
    }

    #[test]
    fn round_trip_everywhere() {
        let tw = block_twist(2, 4, 0.42, 0.495, 5).unwrap();
        let inv = tw.invert().unwrap();
        let amb = Ambient::FatTorus { d: 2 };
        for i in 0..200 {
            let x = (i as f64 * 0.005 + 0.001).min(0.999);
            let y = (i as f64 * 0.017) % 1.0;
            let p = Point::new(vec![x, y], amb).unwrap();
            let rt = inv.eval(&tw.eval(&p).unwrap()).unwrap();
            assert!(p.distance(&rt) <= 1e-12);
        }
    }
}
