//! Numerical inverse of a self-map without a closed-form inverse:
//! damped Newton on the residual `child(x) − target`, seeded at the target.

use nalgebra::{DMatrix, DVector};
use serde_json::Value;

use super::f64_from_json;
use crate::ambient::{Ambient, Point};
use crate::error::{MapError, Result};
use crate::expr::{MapExpr, MapNode};

pub const INVERSE_TOL: f64 = 1e-12;
pub const INVERSE_MAX_ITER: usize = 50;

#[derive(Debug)]
pub struct NumericInverse {
    child: MapExpr,
    tol: f64,
}

pub fn numeric_inverse(child: MapExpr, tol: f64) -> Result<MapExpr> {
    if child.source() != child.target() {
        return Err(MapError::BadParams("numeric inverse needs a self-map".into()));
    }
    Ok(MapExpr::from_node(NumericInverse { child, tol }))
}

impl MapNode for NumericInverse {
    fn kind(&self) -> &'static str {
        "numeric_inverse"
    }
    fn source(&self) -> Ambient {
        self.child.source()
    }
    fn target(&self) -> Ambient {
        self.child.source()
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        let amb = self.source();
        let mut x = p.clone();
        let mut residual = f64::INFINITY;
        for it in 0..INVERSE_MAX_ITER {
            let fx = self.child.eval(&x)?;
            let r = amb.displacement(&p.coords, &fx.coords);
            residual = r.iter().map(|c| c * c).sum::<f64>().sqrt();
            if residual <= self.tol {
                return Ok(x);
            }
            let j = crate::jacobian::jacobian(&self.child, &x, crate::jacobian::DEFAULT_FD_STEP)?;
            let delta = j
                .lu()
                .solve(&DVector::from_vec(r.clone()))
                .ok_or(MapError::InversionDiverged { iterations: it, residual })?;
            // damping keeps long Newton steps from leaving the basin
            let scale = if delta.norm() > 0.25 { 0.25 / delta.norm() } else { 1.0 };
            let coords: Vec<f64> = x.coords.iter().zip(delta.iter()).map(|(c, d)| c - scale * d).collect();
            x = Point::new(coords, amb)?;
        }
        Err(MapError::InversionDiverged { iterations: INVERSE_MAX_ITER, residual })
    }
    fn invert(&self) -> Result<MapExpr> {
        Ok(self.child.clone())
    }
    fn jacobian_closed(&self, p: &Point) -> Option<DMatrix<f64>> {
        let x = self.eval(p).ok()?;
        let j = crate::jacobian::jacobian(&self.child, &x, crate::jacobian::DEFAULT_FD_STEP).ok()?;
        j.try_inverse()
    }
    fn params(&self) -> Value {
        serde_json::json!({ "tol": self.tol })
    }
    fn children(&self) -> Vec<MapExpr> {
        vec![self.child.clone()]
    }
}

pub(crate) fn build_numeric_inverse(params: &Value, mut children: Vec<MapExpr>) -> Result<MapExpr> {
    if children.len() != 1 {
        return Err(MapError::BadParams("numeric inverse takes exactly one child".into()));
    }
    numeric_inverse(children.remove(0), f64_from_json(params, "tol").unwrap_or(INVERSE_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodes::twist::block_twist;

    #[test]
    fn newton_inverse_matches_structural_inverse() {
        let tw = block_twist(2, 4, 0.42, 0.495, 5).unwrap();
        let num_inv = numeric_inverse(tw.clone(), INVERSE_TOL).unwrap();
        let exact_inv = tw.invert().unwrap();
        let amb = Ambient::FatTorus { d: 2 };
        for i in 0..25 {
            let p = Point::new(vec![0.2 + 0.024 * i as f64, (0.06 + 0.037 * i as f64) % 1.0], amb).unwrap();
            let a = num_inv.eval(&p).unwrap();
            let b = exact_inv.eval(&p).unwrap();
            assert!(a.distance(&b) <= 1e-9, "mismatch at sample {i}");
        }
    }
}
