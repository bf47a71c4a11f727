//! Kind-name registry: every node variant registers a builder, and trees are
//! reconstructed from JSON by looking the kind up here.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde_json::Value;

use crate::error::{MapError, Result};
use crate::expr::MapExpr;

pub type NodeBuilder = fn(&Value, Vec<MapExpr>) -> Result<MapExpr>;

fn registry() -> &'static BTreeMap<&'static str, NodeBuilder> {
    static REG: OnceLock<BTreeMap<&'static str, NodeBuilder>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut m: BTreeMap<&'static str, NodeBuilder> = BTreeMap::new();
        m.insert("identity", crate::nodes::affine::build_identity);
        m.insert("translation", crate::nodes::affine::build_translation);
        m.insert("isometry", crate::nodes::affine::build_isometry);
        m.insert("similarity", crate::nodes::affine::build_similarity);
        m.insert("shear", crate::nodes::shear::build_shear);
        m.insert("block_twist", crate::nodes::twist::build_block_twist);
        m.insert("anisotropic_wrap", crate::nodes::wrap::build_wrap);
        m.insert("flow", crate::nodes::flow::build_flow);
        m.insert("piecewise_balls", crate::nodes::piecewise::build_piecewise);
        m.insert("numeric_inverse", crate::nodes::numeric_inverse::build_numeric_inverse);
        m.insert("ball_chart", crate::nodes::ball_chart::build_ball_chart);
        m.insert("chart_conjugate", crate::nodes::chart_conjugate::build_chart_conjugate);
        m.insert("compose", crate::expr::build_compose);
        m
    })
}

pub fn builder(kind: &str) -> Result<NodeBuilder> {
    registry().get(kind).copied().ok_or_else(|| MapError::UnknownKind(kind.to_string()))
}

pub fn known_kinds() -> Vec<&'static str> {
    registry().keys().copied().collect()
}
