//! Nested-array encoding for party-1-major tensors.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::tensor::volume;

pub(crate) fn to_nested<T, F>(values: &[T], dims: &[usize], leaf: F) -> Value
where
    F: Fn(&T) -> Value + Copy,
{
    debug_assert_eq!(values.len(), volume(dims));
    if dims.is_empty() {
        return leaf(&values[0]);
    }
    let chunk = values.len() / dims[0];
    Value::Array(
        values
            .chunks(chunk)
            .map(|c| to_nested(c, &dims[1..], leaf))
            .collect(),
    )
}

/// Flattens a nested array whose shape must be exactly `dims`.
pub(crate) fn from_nested<T, F>(value: &Value, dims: &[usize], leaf: F) -> Result<Vec<T>>
where
    F: Fn(&Value) -> Option<T> + Copy,
{
    let mut out = Vec::with_capacity(volume(dims));
    flatten_into(value, dims, leaf, &mut out)?;
    Ok(out)
}

fn flatten_into<T, F>(value: &Value, dims: &[usize], leaf: F, out: &mut Vec<T>) -> Result<()>
where
    F: Fn(&Value) -> Option<T> + Copy,
{
    match dims.split_first() {
        None => {
            let v = leaf(value).ok_or_else(|| Error::Json(format!("unexpected array element {value}")))?;
            out.push(v);
            Ok(())
        }
        Some((&len, rest)) => {
            let arr = value
                .as_array()
                .ok_or_else(|| Error::Json(format!("expected nested array of length {len}")))?;
            if arr.len() != len {
                return Err(Error::Json(format!(
                    "nested array has length {}, expected {len}",
                    arr.len()
                )));
            }
            for v in arr {
                flatten_into(v, rest, leaf, out)?;
            }
            Ok(())
        }
    }
}

/// Accepts JSON numbers that hold an exact integer (`3` or `3.0`).
pub(crate) fn as_exact_i64(v: &Value) -> Option<i64> {
    if let Some(i) = v.as_i64() {
        return Some(i);
    }
    let f = v.as_f64()?;
    (f.fract() == 0.0 && f.abs() < 9.0e15).then_some(f as i64)
}
