//! Conjugation by a chart defined on part of its source ambient:
//! `p ↦ h⁻¹(inner(h(p)))` inside the chart's domain, identity elsewhere.
//! This is how a fat-torus construction gets carried onto the ball: the
//! inner map equals the identity near the chart boundary, so the extension
//! is seamless.

use serde_json::Value;

use crate::ambient::{Ambient, Point};
use crate::error::{MapError, Result};
use crate::expr::{MapExpr, MapNode};

#[derive(Debug)]
pub struct ChartConjugate {
    chart: MapExpr,
    chart_inv: MapExpr,
    inner: MapExpr,
}

pub fn chart_conjugate(chart: MapExpr, inner: MapExpr) -> Result<MapExpr> {
    if inner.source() != chart.target() || inner.target() != chart.target() {
        return Err(MapError::BadParams("inner map must be a self-map of the chart target".into()));
    }
    if inner.is_identity() {
        return Ok(super::affine::identity(chart.source()));
    }
    let chart_inv = chart.invert()?;
    Ok(MapExpr::from_node(ChartConjugate { chart, chart_inv, inner }))
}

impl MapNode for ChartConjugate {
    fn kind(&self) -> &'static str {
        "chart_conjugate"
    }
    fn source(&self) -> Ambient {
        self.chart.source()
    }
    fn target(&self) -> Ambient {
        self.chart.source()
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        match self.chart.node().domain_contains(p) {
            Some(true) => {
                let up = self.chart.eval(p)?;
                let moved = self.inner.eval(&up)?;
                self.chart_inv.eval(&moved)
            }
            _ => Ok(p.clone()),
        }
    }
    fn invert(&self) -> Result<MapExpr> {
        chart_conjugate(self.chart.clone(), self.inner.invert()?)
    }
    fn det_jacobian_closed(&self, p: &Point) -> Option<f64> {
        match self.chart.node().domain_contains(p) {
            Some(true) => {
                // chart and its inverse cancel in the determinant
                let up = self.chart.eval(p).ok()?;
                crate::jacobian::det_jacobian(&self.inner, &up, crate::jacobian::DEFAULT_FD_STEP).ok()
            }
            _ => Some(1.0),
        }
    }
    fn params(&self) -> Value {
        Value::Null
    }
    fn children(&self) -> Vec<MapExpr> {
        vec![self.chart.clone(), self.inner.clone()]
    }
}

pub(crate) fn build_chart_conjugate(_params: &Value, mut children: Vec<MapExpr>) -> Result<MapExpr> {
    if children.len() != 2 {
        return Err(MapError::BadParams("chart conjugate takes [chart, inner]".into()));
    }
    let inner = children.remove(1);
    let chart = children.remove(0);
    chart_conjugate(chart, inner)
}
