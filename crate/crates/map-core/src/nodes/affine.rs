//! Identity, translations, isometries and similarities.
//!
//! Isometries and similarities are stored in anchored form
//! `p ↦ anchor_dst + scale · O · lift(p − anchor_src)`, where `lift` takes
//! the shortest-arc representative of the difference.  The anchored form
//! stays exact on periodic ambients: a disc is first lifted to the chart of
//! its own center, so a small disc never straddles a wrap seam.

use nalgebra::{DMatrix, DVector};
use serde_json::Value;

use super::{ambient_from_json, f64_from_json, mat_from_json, mat_to_json, vec_from_json};
use crate::ambient::{Ambient, Point};
use crate::error::{MapError, Result};
use crate::expr::{MapExpr, MapNode};

/// Maximum tolerated orthogonality defect `‖OᵀO − I‖_∞` for isometry parts.
pub const ORTHO_TOL: f64 = 1e-14;

#[derive(Debug)]
pub struct Identity {
    ambient: Ambient,
}

pub fn identity(ambient: Ambient) -> MapExpr {
    MapExpr::from_node(Identity { ambient })
}

impl MapNode for Identity {
    fn kind(&self) -> &'static str {
        "identity"
    }
    fn source(&self) -> Ambient {
        self.ambient
    }
    fn target(&self) -> Ambient {
        self.ambient
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        Ok(p.clone())
    }
    fn invert(&self) -> Result<MapExpr> {
        Ok(identity(self.ambient))
    }
    fn jacobian_closed(&self, p: &Point) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(p.dim(), p.dim()))
    }
    fn params(&self) -> Value {
        serde_json::json!({ "ambient": self.ambient })
    }
    fn is_identity(&self) -> bool {
        true
    }
}

pub(crate) fn build_identity(params: &Value, _ch: Vec<MapExpr>) -> Result<MapExpr> {
    Ok(identity(ambient_from_json(params, "ambient")?))
}

#[derive(Debug)]
pub struct Translation {
    ambient: Ambient,
    v: Vec<f64>,
}

pub fn translation(ambient: Ambient, v: Vec<f64>) -> MapExpr {
    MapExpr::from_node(Translation { ambient, v })
}

impl MapNode for Translation {
    fn kind(&self) -> &'static str {
        "translation"
    }
    fn source(&self) -> Ambient {
        self.ambient
    }
    fn target(&self) -> Ambient {
        self.ambient
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        let coords = p.coords.iter().zip(&self.v).map(|(c, t)| c + t).collect();
        Point::new(coords, self.ambient)
    }
    fn invert(&self) -> Result<MapExpr> {
        Ok(translation(self.ambient, self.v.iter().map(|t| -t).collect()))
    }
    fn jacobian_closed(&self, p: &Point) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(p.dim(), p.dim()))
    }
    fn params(&self) -> Value {
        serde_json::json!({ "ambient": self.ambient, "v": self.v })
    }
}

pub(crate) fn build_translation(params: &Value, _ch: Vec<MapExpr>) -> Result<MapExpr> {
    Ok(translation(ambient_from_json(params, "ambient")?, vec_from_json(params, "v")?))
}

/// Orthogonality defect `‖OᵀO − I‖_∞`.
pub fn orthogonality_defect(o: &DMatrix<f64>) -> f64 {
    let g = o.transpose() * o - DMatrix::identity(o.nrows(), o.ncols());
    g.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[derive(Debug)]
pub struct Isometry {
    ambient: Ambient,
    o: DMatrix<f64>,
    anchor_src: Vec<f64>,
    anchor_dst: Vec<f64>,
}

pub fn isometry(
    ambient: Ambient,
    o: DMatrix<f64>,
    anchor_src: Vec<f64>,
    anchor_dst: Vec<f64>,
) -> Result<MapExpr> {
    let defect = orthogonality_defect(&o);
    if defect > ORTHO_TOL {
        return Err(MapError::BadParams(format!("orthogonality defect {defect:.3e} exceeds {ORTHO_TOL:.0e}")));
    }
    Ok(MapExpr::from_node(Isometry { ambient, o, anchor_src, anchor_dst }))
}

impl Isometry {
    fn apply(&self, p: &Point) -> Result<Point> {
        let rel = DVector::from_vec(self.ambient.displacement(&self.anchor_src, &p.coords));
        let out = &self.o * rel;
        let coords = self.anchor_dst.iter().zip(out.iter()).map(|(a, r)| a + r).collect();
        Point::new(coords, self.ambient)
    }
}

impl MapNode for Isometry {
    fn kind(&self) -> &'static str {
        "isometry"
    }
    fn source(&self) -> Ambient {
        self.ambient
    }
    fn target(&self) -> Ambient {
        self.ambient
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        self.apply(p)
    }
    fn invert(&self) -> Result<MapExpr> {
        isometry(self.ambient, self.o.transpose(), self.anchor_dst.clone(), self.anchor_src.clone())
    }
    fn jacobian_closed(&self, _p: &Point) -> Option<DMatrix<f64>> {
        Some(self.o.clone())
    }
    fn params(&self) -> Value {
        serde_json::json!({
            "ambient": self.ambient,
            "o": mat_to_json(&self.o),
            "anchor_src": self.anchor_src,
            "anchor_dst": self.anchor_dst,
        })
    }
}

pub(crate) fn build_isometry(params: &Value, _ch: Vec<MapExpr>) -> Result<MapExpr> {
    isometry(
        ambient_from_json(params, "ambient")?,
        mat_from_json(params.get("o").ok_or_else(|| MapError::BadParams("missing `o`".into()))?)?,
        vec_from_json(params, "anchor_src")?,
        vec_from_json(params, "anchor_dst")?,
    )
}

/// `p ↦ anchor_dst + scale · O · lift(p − anchor_src)`.  The rescaling
/// `h_i` that blows a tower disc up to the unit ball is this node with
/// `scale = 1/ρ`.  Not volume preserving: `det = scale^d`.
#[derive(Debug)]
pub struct Similarity {
    source: Ambient,
    target: Ambient,
    scale: f64,
    o: DMatrix<f64>,
    anchor_src: Vec<f64>,
    anchor_dst: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn similarity(
    source: Ambient,
    target: Ambient,
    scale: f64,
    o: DMatrix<f64>,
    anchor_src: Vec<f64>,
    anchor_dst: Vec<f64>,
) -> Result<MapExpr> {
    if scale == 0.0 || !scale.is_finite() {
        return Err(MapError::BadParams("similarity scale must be finite nonzero".into()));
    }
    let defect = orthogonality_defect(&o);
    if defect > ORTHO_TOL {
        return Err(MapError::BadParams(format!("orthogonality defect {defect:.3e} exceeds {ORTHO_TOL:.0e}")));
    }
    Ok(MapExpr::from_node(Similarity { source, target, scale, o, anchor_src, anchor_dst }))
}

impl MapNode for Similarity {
    fn kind(&self) -> &'static str {
        "similarity"
    }
    fn source(&self) -> Ambient {
        self.source
    }
    fn target(&self) -> Ambient {
        self.target
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        let rel = DVector::from_vec(self.source.displacement(&self.anchor_src, &p.coords));
        let out = &self.o * rel * self.scale;
        let coords = self.anchor_dst.iter().zip(out.iter()).map(|(a, r)| a + r).collect();
        Point::new(coords, self.target)
    }
    fn invert(&self) -> Result<MapExpr> {
        similarity(
            self.target,
            self.source,
            1.0 / self.scale,
            self.o.transpose(),
            self.anchor_dst.clone(),
            self.anchor_src.clone(),
        )
    }
    fn jacobian_closed(&self, _p: &Point) -> Option<DMatrix<f64>> {
        Some(&self.o * self.scale)
    }
    fn params(&self) -> Value {
        serde_json::json!({
            "source": self.source,
            "target": self.target,
            "scale": self.scale,
            "o": mat_to_json(&self.o),
            "anchor_src": self.anchor_src,
            "anchor_dst": self.anchor_dst,
        })
    }
}

pub(crate) fn build_similarity(params: &Value, _ch: Vec<MapExpr>) -> Result<MapExpr> {
    similarity(
        ambient_from_json(params, "source")?,
        ambient_from_json(params, "target")?,
        f64_from_json(params, "scale")?,
        mat_from_json(params.get("o").ok_or_else(|| MapError::BadParams("missing `o`".into()))?)?,
        vec_from_json(params, "anchor_src")?,
        vec_from_json(params, "anchor_dst")?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_wraps_on_torus() {
        // unit shift along the first circle lands back on the fundamental domain
        let a = 32.0f64;
        let amb = Ambient::Torus { n: 3 };
        let t = translation(amb, vec![1.0, 1.0 / a, 1.0 / (a * a)]);
        let p = Point::new(vec![0.0, 0.0, 0.0], amb).unwrap();
        let q = t.eval(&p).unwrap();
        assert_eq!(q.coords[0], 0.0);
        assert!((q.coords[1] - 1.0 / a).abs() < 1e-15);
        assert!((q.coords[2] - 1.0 / (a * a)).abs() < 1e-15);
    }

    #[test]
    fn isometry_rejects_non_orthogonal() {
        let amb = Ambient::Torus { n: 2 };
        let o = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(isometry(amb, o, vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn similarity_inverse_round_trip() {
        // scale 4A with A = 32 has closed inverse of scale 1/(4A)
        let a = 32.0;
        let src = Ambient::FatTorus { d: 2 };
        let dst = Ambient::Ball { d: 2 };
        let h = similarity(
            src,
            dst,
            4.0 * a,
            DMatrix::identity(2, 2),
            vec![0.5, 0.125],
            vec![0.0, 0.0],
        )
        .unwrap();
        let hinv = h.invert().unwrap();
        let p = Point::new(vec![0.501, 0.124], src).unwrap();
        let q = hinv.eval(&h.eval(&p).unwrap()).unwrap();
        assert!(p.distance(&q) <= 1e-12);
    }

    #[test]
    fn similarity_jacobian_is_scaled_orthogonal() {
        let a = 32.0;
        let src = Ambient::FatTorus { d: 2 };
        let h = similarity(
            src,
            Ambient::Ball { d: 2 },
            4.0 * a,
            DMatrix::identity(2, 2),
            vec![0.5, 0.125],
            vec![0.0, 0.0],
        )
        .unwrap();
        let p = Point::new(vec![0.5, 0.125], src).unwrap();
        let j = h.node().jacobian_closed(&p).unwrap();
        assert_eq!(j[(0, 0)], 128.0);
        assert_eq!(j[(1, 1)], 128.0);
        assert_eq!(j[(0, 1)], 0.0);
    }
}
