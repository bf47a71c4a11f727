//! Anisotropic rescale from the fat torus onto the long fat torus:
//! `(x, y, z) ↦ (x/q, q·y, z)`.  Linear, exactly volume preserving, and it
//! carries block `k` of the fat torus onto segment `k` of the long one, so
//! it conjugates the `1/q`-shift to the unit shift.

use nalgebra::DMatrix;
use serde_json::Value;

use super::u64_from_json;
use crate::ambient::{Ambient, Point};
use crate::error::{MapError, Result};
use crate::expr::{MapExpr, MapNode};

#[derive(Debug)]
pub struct AnisotropicWrap {
    d: usize,
    q: u32,
    /// false maps F -> F~, true is the inverse direction
    reversed: bool,
}

pub fn anisotropic_wrap(d: usize, q: u32) -> Result<MapExpr> {
    if d < 2 || q < 2 {
        return Err(MapError::BadParams("wrap needs d >= 2, q >= 2".into()));
    }
    Ok(MapExpr::from_node(AnisotropicWrap { d, q, reversed: false }))
}

impl MapNode for AnisotropicWrap {
    fn kind(&self) -> &'static str {
        "anisotropic_wrap"
    }
    fn source(&self) -> Ambient {
        if self.reversed {
            Ambient::LongFatTorus { d: self.d, q: self.q }
        } else {
            Ambient::FatTorus { d: self.d }
        }
    }
    fn target(&self) -> Ambient {
        if self.reversed {
            Ambient::FatTorus { d: self.d }
        } else {
            Ambient::LongFatTorus { d: self.d, q: self.q }
        }
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        let qf = self.q as f64;
        let mut coords = p.coords.clone();
        if self.reversed {
            coords[0] *= qf;
            coords[1] /= qf;
        } else {
            coords[0] /= qf;
            coords[1] *= qf;
        }
        Point::new(coords, self.target())
    }
    fn invert(&self) -> Result<MapExpr> {
        Ok(MapExpr::from_node(AnisotropicWrap { d: self.d, q: self.q, reversed: !self.reversed }))
    }
    fn jacobian_closed(&self, _p: &Point) -> Option<DMatrix<f64>> {
        let qf = self.q as f64;
        let mut j = DMatrix::identity(self.d, self.d);
        if self.reversed {
            j[(0, 0)] = qf;
            j[(1, 1)] = 1.0 / qf;
        } else {
            j[(0, 0)] = 1.0 / qf;
            j[(1, 1)] = qf;
        }
        Some(j)
    }
    fn params(&self) -> Value {
        serde_json::json!({ "d": self.d, "q": self.q, "reversed": self.reversed })
    }
}

pub(crate) fn build_wrap(params: &Value, _ch: Vec<MapExpr>) -> Result<MapExpr> {
    let w = anisotropic_wrap(u64_from_json(params, "d")? as usize, u64_from_json(params, "q")? as u32)?;
    if params.get("reversed").and_then(Value::as_bool).unwrap_or(false) {
        w.invert()
    } else {
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_go_to_segments() {
        let w = anisotropic_wrap(2, 4).unwrap();
        let p = Point::new(vec![0.8, 0.6], Ambient::FatTorus { d: 2 }).unwrap();
        let q = w.eval(&p).unwrap();
        // block floor(0.6*4) = 2 lands in segment [2,3]
        assert!((q.coords[0] - 0.2).abs() < 1e-15);
        assert!((q.coords[1] - 2.4).abs() < 1e-15);
    }

    #[test]
    fn seam_anchoring() {
        // the y = 0 slice maps onto the ỹ = 0 slice
        let w = anisotropic_wrap(2, 4).unwrap();
        let p = Point::new(vec![0.37, 0.0], Ambient::FatTorus { d: 2 }).unwrap();
        let q = w.eval(&p).unwrap();
        assert_eq!(q.coords[1], 0.0);
        assert!((q.coords[0] - 0.0925).abs() < 1e-15);
    }

    #[test]
    fn volume_factor_is_one() {
        let w = anisotropic_wrap(3, 4).unwrap();
        let p = Point::new(vec![0.5, 0.3, 0.7], Ambient::FatTorus { d: 3 }).unwrap();
        let j = w.node().jacobian_closed(&p).unwrap();
        assert!((j.determinant() - 1.0).abs() < 1e-15);
    }
}
