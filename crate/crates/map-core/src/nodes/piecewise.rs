//! A map acting disc-by-disc: on each listed ball it applies the attached
//! inner map (which must send the ball into itself), elsewhere the identity.
//! Disc membership uses the ambient's shortest-arc metric, so discs may sit
//! anywhere on a torus.  An empty disc list collapses to the identity.

use nalgebra::DMatrix;
use serde_json::Value;

use super::ambient_from_json;
use crate::ambient::{Ambient, Point};
use crate::error::{MapError, Result};
use crate::expr::{MapExpr, MapNode};

#[derive(Debug, Clone)]
pub struct Disc {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug)]
pub struct PiecewiseBalls {
    ambient: Ambient,
    discs: Vec<Disc>,
    inner: Vec<MapExpr>,
}

pub fn piecewise_balls(ambient: Ambient, discs: Vec<Disc>, inner: Vec<MapExpr>) -> Result<MapExpr> {
    if discs.len() != inner.len() {
        return Err(MapError::BadParams("one inner map per disc required".into()));
    }
    for m in &inner {
        if m.source() != ambient || m.target() != ambient {
            return Err(MapError::BadParams("inner maps must act on the host ambient".into()));
        }
    }
    // degenerate-support rule: no discs means the identity
    if discs.is_empty() || inner.iter().all(|m| m.is_identity()) {
        return Ok(super::affine::identity(ambient));
    }
    Ok(MapExpr::from_node(PiecewiseBalls { ambient, discs, inner }))
}

impl PiecewiseBalls {
    fn find_disc(&self, p: &Point) -> Option<usize> {
        self.discs
            .iter()
            .position(|d| self.ambient.distance(&d.center, &p.coords) < d.radius)
    }
}

impl MapNode for PiecewiseBalls {
    fn kind(&self) -> &'static str {
        "piecewise_balls"
    }
    fn source(&self) -> Ambient {
        self.ambient
    }
    fn target(&self) -> Ambient {
        self.ambient
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        match self.find_disc(p) {
            Some(i) => self.inner[i].eval(p),
            None => Ok(p.clone()),
        }
    }
    fn invert(&self) -> Result<MapExpr> {
        // inner maps fix their discs setwise, so inverting in place is exact
        let inv: Result<Vec<MapExpr>> = self.inner.iter().map(|m| m.invert()).collect();
        Ok(MapExpr::from_node(PiecewiseBalls {
            ambient: self.ambient,
            discs: self.discs.clone(),
            inner: inv?,
        }))
    }
    fn jacobian_closed(&self, p: &Point) -> Option<DMatrix<f64>> {
        match self.find_disc(p) {
            Some(i) => crate::jacobian::jacobian(&self.inner[i], p, crate::jacobian::DEFAULT_FD_STEP).ok(),
            None => Some(DMatrix::identity(p.dim(), p.dim())),
        }
    }
    fn params(&self) -> Value {
        serde_json::json!({
            "ambient": self.ambient,
            "discs": self.discs.iter().map(|d| serde_json::json!({
                "center": d.center,
                "radius": d.radius,
            })).collect::<Vec<_>>(),
        })
    }
    fn children(&self) -> Vec<MapExpr> {
        self.inner.clone()
    }
}

pub(crate) fn build_piecewise(params: &Value, children: Vec<MapExpr>) -> Result<MapExpr> {
    let ambient = ambient_from_json(params, "ambient")?;
    let raw = params
        .get("discs")
        .and_then(Value::as_array)
        .ok_or_else(|| MapError::BadParams("missing `discs`".into()))?;
    let mut discs = Vec::with_capacity(raw.len());
    for d in raw {
        discs.push(Disc {
            center: super::vec_from_json(d, "center")?,
            radius: super::f64_from_json(d, "radius")?,
        });
    }
    piecewise_balls(ambient, discs, children)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodes::affine::{identity, translation};

    #[test]
    fn applies_inner_only_inside() {
        let amb = Ambient::Torus { n: 2 };
        // a tiny rigid translation supported logically on one disc
        let inner = translation(amb, vec![0.001, 0.0]);
        let m = piecewise_balls(
            amb,
            vec![Disc { center: vec![0.5, 0.5], radius: 0.1 }],
            vec![inner],
        )
        .unwrap();
        let p_in = Point::new(vec![0.52, 0.5], amb).unwrap();
        let p_out = Point::new(vec![0.8, 0.5], amb).unwrap();
        assert!((m.eval(&p_in).unwrap().coords[0] - 0.521).abs() < 1e-15);
        assert_eq!(m.eval(&p_out).unwrap().coords, p_out.coords);
    }

    #[test]
    fn all_identity_collapses() {
        let amb = Ambient::Torus { n: 2 };
        let m = piecewise_balls(
            amb,
            vec![Disc { center: vec![0.5, 0.5], radius: 0.1 }],
            vec![identity(amb)],
        )
        .unwrap();
        assert!(m.is_identity());
    }

    #[test]
    fn membership_respects_wraparound() {
        let amb = Ambient::Torus { n: 2 };
        let inner = translation(amb, vec![0.001, 0.0]);
        let m = piecewise_balls(
            amb,
            vec![Disc { center: vec![0.01, 0.5], radius: 0.05 }],
            vec![inner],
        )
        .unwrap();
        // 0.98 is within 0.03 of the center across the seam
        let p = Point::new(vec![0.98, 0.5], amb).unwrap();
        assert!((m.eval(&p).unwrap().coords[0] - 0.981).abs() < 1e-15);
    }
}
