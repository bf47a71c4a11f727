//! The map expression tree.
//!
//! Every primitive map sits behind the [`MapNode`] trait; trees are built
//! from `Compose` and `Inverse` internal nodes plus the leaf kinds in
//! [`crate::nodes`].  Trees are immutable after construction and cheap to
//! clone (`Arc`), so evaluation, Jacobians and norm sweeps can run from many
//! threads.  Serialization goes through the kind-name registry in
//! [`crate::registry`].

use std::sync::Arc;

use nalgebra::DMatrix;
use serde_json::Value;

use crate::ambient::{Ambient, Point};
use crate::error::{MapError, Result};

/// One map variant.  `eval` may assume the point already passed the ambient
/// check done by [`MapExpr::eval`].
pub trait MapNode: std::fmt::Debug + Send + Sync {
    fn kind(&self) -> &'static str;
    fn source(&self) -> Ambient;
    fn target(&self) -> Ambient;
    fn eval(&self, p: &Point) -> Result<Point>;
    /// Structural inverse.  Nodes with a closed form return it; the rest
    /// wrap themselves in a damped-Newton inverse node.
    fn invert(&self) -> Result<MapExpr>;
    /// Closed-form derivative, when the node has one.
    fn jacobian_closed(&self, _p: &Point) -> Option<DMatrix<f64>> {
        None
    }
    /// Exact Jacobian determinant, when the node knows it without forming
    /// the matrix (flux-built charts know det ≡ 1 away from their seams).
    fn det_jacobian_closed(&self, _p: &Point) -> Option<f64> {
        None
    }
    /// For charts defined on a proper subset of their source ambient:
    /// whether the point lies strictly inside the chart's domain.
    fn domain_contains(&self, _p: &Point) -> Option<bool> {
        None
    }
    fn params(&self) -> Value;
    fn children(&self) -> Vec<MapExpr> {
        Vec::new()
    }
    fn is_identity(&self) -> bool {
        false
    }
}

/// Shared handle to an immutable map tree.
#[derive(Clone)]
pub struct MapExpr(pub(crate) Arc<dyn MapNode>);

impl std::fmt::Debug for MapExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MapExpr({})", self.0.kind())
    }
}

impl serde::Serialize for MapExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for MapExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        MapExpr::from_value(&v).map_err(serde::de::Error::custom)
    }
}

impl MapExpr {
    pub fn from_node<N: MapNode + 'static>(node: N) -> Self {
        MapExpr(Arc::new(node))
    }

    pub fn kind(&self) -> &'static str {
        self.0.kind()
    }

    pub fn source(&self) -> Ambient {
        self.0.source()
    }

    pub fn target(&self) -> Ambient {
        self.0.target()
    }

    pub fn node(&self) -> &dyn MapNode {
        self.0.as_ref()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_identity()
    }

    pub fn eval(&self, p: &Point) -> Result<Point> {
        if p.ambient != self.source() {
            return Err(MapError::AmbientMismatch {
                point: p.ambient.to_string(),
                expected: self.source().to_string(),
            });
        }
        self.0.eval(p)
    }

    /// n-fold iteration; requires source == target.
    pub fn iterate(&self, p: &Point, n: usize) -> Result<Point> {
        let mut q = p.clone();
        for _ in 0..n {
            q = self.eval(&q)?;
        }
        Ok(q)
    }

    pub fn invert(&self) -> Result<MapExpr> {
        self.0.invert()
    }

    pub fn to_value(&self) -> Value {
        let children: Vec<Value> = self.0.children().iter().map(|c| c.to_value()).collect();
        let mut obj = serde_json::Map::new();
        obj.insert("kind".into(), Value::String(self.kind().into()));
        obj.insert("params".into(), self.0.params());
        if !children.is_empty() {
            obj.insert("children".into(), Value::Array(children));
        }
        Value::Object(obj)
    }

    pub fn from_value(v: &Value) -> Result<MapExpr> {
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| MapError::BadParams("node missing `kind`".into()))?;
        let params = v.get("params").cloned().unwrap_or(Value::Null);
        let children = match v.get("children") {
            Some(Value::Array(arr)) => arr.iter().map(MapExpr::from_value).collect::<Result<Vec<_>>>()?,
            _ => Vec::new(),
        };
        let builder = crate::registry::builder(kind)?;
        builder(&params, children)
    }
}

/// Composition node: `Compose([a, b, c]) = a ∘ b ∘ c`, i.e. the last child
/// acts first.  Adjacent ambients must match.  Identity children are dropped
/// and nested compositions flattened; an empty product collapses to the
/// identity on its ambient.
#[derive(Debug)]
pub struct Compose {
    children: Vec<MapExpr>,
    source: Ambient,
    target: Ambient,
}

impl Compose {
    pub fn new(children: Vec<MapExpr>) -> Result<MapExpr> {
        if children.is_empty() {
            return Err(MapError::BadParams("empty composition without ambient".into()));
        }
        let mut flat: Vec<MapExpr> = Vec::new();
        for c in children {
            if c.kind() == "compose" {
                flat.extend(c.node().children());
            } else {
                flat.push(c);
            }
        }
        let source = flat.last().unwrap().source();
        let target = flat.first().unwrap().target();
        for pair in flat.windows(2) {
            // pair[1] feeds pair[0]
            if pair[1].target() != pair[0].source() {
                return Err(MapError::ComposeMismatch {
                    left: pair[1].target().to_string(),
                    right: pair[0].source().to_string(),
                });
            }
        }
        let kept: Vec<MapExpr> = flat.into_iter().filter(|c| !c.is_identity()).collect();
        match kept.len() {
            0 => Ok(crate::nodes::affine::identity(source)),
            1 => Ok(kept.into_iter().next().unwrap()),
            _ => Ok(MapExpr::from_node(Compose { children: kept, source, target })),
        }
    }
}

impl MapNode for Compose {
    fn kind(&self) -> &'static str {
        "compose"
    }
    fn source(&self) -> Ambient {
        self.source
    }
    fn target(&self) -> Ambient {
        self.target
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        let mut q = p.clone();
        for c in self.children.iter().rev() {
            q = c.eval(&q)?;
        }
        Ok(q)
    }
    fn invert(&self) -> Result<MapExpr> {
        let inv: Result<Vec<MapExpr>> = self.children.iter().rev().map(|c| c.invert()).collect();
        Compose::new(inv?)
    }
    fn params(&self) -> Value {
        Value::Null
    }
    fn children(&self) -> Vec<MapExpr> {
        self.children.clone()
    }
}

pub(crate) fn build_compose(_params: &Value, children: Vec<MapExpr>) -> Result<MapExpr> {
    Compose::new(children)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodes::affine::{identity, translation};

    #[test]
    fn compose_simplifies_identities() {
        let amb = Ambient::Torus { n: 2 };
        let t = translation(amb, vec![0.25, 0.5]);
        let c = Compose::new(vec![identity(amb), t.clone(), identity(amb)]).unwrap();
        assert_eq!(c.kind(), "translation");
        let c = Compose::new(vec![identity(amb), identity(amb)]).unwrap();
        assert!(c.is_identity());
    }

    #[test]
    fn compose_applies_right_to_left() {
        let amb = Ambient::Torus { n: 1 };
        let a = translation(amb, vec![0.25]);
        let b = translation(amb, vec![0.5]);
        let c = Compose::new(vec![a, b]).unwrap();
        let p = Point::new(vec![0.0], amb).unwrap();
        let q = c.eval(&p).unwrap();
        assert!((q.coords[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ambient_mismatch_is_reported() {
        let a = translation(Ambient::Torus { n: 2 }, vec![0.1, 0.1]);
        let p = Point::new(vec![0.1, 0.1], Ambient::FatTorus { d: 2 }).unwrap();
        assert!(matches!(a.eval(&p), Err(MapError::AmbientMismatch { .. })));
    }
}
