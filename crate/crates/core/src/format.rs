//! Number formatting shared by every emitted file: 17 significant digits,
//! which round-trips any `f64` exactly.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use serde_json::Value;

/// Format with 17 significant digits in scientific notation. Non-finite
/// values are written as `nan`, `inf` or `-inf`.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// `f64` that serializes to JSON with 17 significant digits; non-finite
/// values become `null`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(fmt17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl From<f64> for Sig17 {
    fn from(x: f64) -> Self {
        Sig17(x)
    }
}

pub fn sig17_vec(xs: &[f64]) -> Vec<Sig17> {
    xs.iter().copied().map(Sig17).collect()
}

/// `serialize_with` helper writing an `f64` as 17-significant-digit text
/// (used for CSV records).
pub fn ser17<S: Serializer>(x: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(&fmt17(*x))
}

pub fn ser17_opt<S: Serializer>(x: &Option<f64>, serializer: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => serializer.serialize_str(&fmt17(*v)),
        None => serializer.serialize_none(),
    }
}

/// JSON value whose floating-point numbers are written via [`Sig17`].
struct Sig17Value<'a>(&'a Value);

impl Serialize for Sig17Value<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Value::Number(n) if n.is_f64() => Sig17(n.as_f64().unwrap_or(f64::NAN)).serialize(serializer),
            Value::Array(items) => serializer.collect_seq(items.iter().map(Sig17Value)),
            Value::Object(map) => serializer.collect_map(map.iter().map(|(k, v)| (k, Sig17Value(v)))),
            other => other.serialize(serializer),
        }
    }
}

/// Pretty JSON of `value` with every non-integer number at 17 significant
/// digits.
pub fn to_json_sig17<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    serde_json::to_string_pretty(&Sig17Value(&v))
}
