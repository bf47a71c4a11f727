//! The primitive node kinds.

pub mod affine;
pub mod ball_chart;
pub mod chart_conjugate;
pub mod flow;
pub mod numeric_inverse;
pub mod piecewise;
pub mod shear;
pub mod twist;
pub mod wrap;

use nalgebra::DMatrix;
use serde_json::Value;

use crate::error::{MapError, Result};

pub(crate) fn mat_to_json(m: &DMatrix<f64>) -> Value {
    serde_json::json!({
        "rows": m.nrows(),
        "data": m.iter().cloned().collect::<Vec<f64>>(), // column-major
    })
}

pub(crate) fn mat_from_json(v: &Value) -> Result<DMatrix<f64>> {
    let rows = v
        .get("rows")
        .and_then(Value::as_u64)
        .ok_or_else(|| MapError::BadParams("matrix missing `rows`".into()))? as usize;
    let data: Vec<f64> = serde_json::from_value(
        v.get("data").cloned().ok_or_else(|| MapError::BadParams("matrix missing `data`".into()))?,
    )
    .map_err(|e| MapError::BadParams(e.to_string()))?;
    if rows == 0 || data.len() % rows != 0 {
        return Err(MapError::BadParams("matrix shape mismatch".into()));
    }
    Ok(DMatrix::from_column_slice(rows, data.len() / rows, &data))
}

pub(crate) fn vec_from_json(v: &Value, key: &str) -> Result<Vec<f64>> {
    serde_json::from_value(
        v.get(key).cloned().ok_or_else(|| MapError::BadParams(format!("missing `{key}`")))?,
    )
    .map_err(|e| MapError::BadParams(e.to_string()))
}

pub(crate) fn f64_from_json(v: &Value, key: &str) -> Result<f64> {
    v.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| MapError::BadParams(format!("missing `{key}`")))
}

pub(crate) fn u64_from_json(v: &Value, key: &str) -> Result<u64> {
    v.get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| MapError::BadParams(format!("missing `{key}`")))
}

pub(crate) fn ambient_from_json(v: &Value, key: &str) -> Result<crate::ambient::Ambient> {
    serde_json::from_value(
        v.get(key).cloned().ok_or_else(|| MapError::BadParams(format!("missing `{key}`")))?,
    )
    .map_err(|e| MapError::BadParams(e.to_string()))
}
