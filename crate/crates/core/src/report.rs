//! JSON output with floats rounded to 12 significant digits.

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// Rounds to 12 significant digits, then back to the shortest `f64`.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let s = format!("{:.11e}", x);
    let y: f64 = s.parse().unwrap_or(x);
    if y == 0.0 {
        0.0
    } else {
        y
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_value<T: Serialize>(item: &T) -> Result<Value> {
    let mut v = serde_json::to_value(item)?;
    round_value(&mut v);
    Ok(v)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(item: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&to_value(item)?)?;
    s.push('\n');
    Ok(s)
}
