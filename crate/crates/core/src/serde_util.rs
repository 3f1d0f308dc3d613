//! JSON helpers for non-finite floats. JSON has no literal for infinity or
//! NaN, so they are written as the strings `"inf"`, `"-inf"` and `"nan"`.

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Repr<'a> {
    Number(f64),
    #[serde(borrow)]
    Text(&'a str),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OwnedRepr {
    Number(f64),
    Text(String),
}

/// Parses `"inf"`, `"+inf"`, `"infinity"`, `"-inf"`, `"nan"` (any case) or a
/// decimal literal.
pub fn parse_float(s: &str) -> Option<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        other => other.parse().ok(),
    }
}

pub fn to_value(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else if v.is_nan() {
        serde_json::json!("nan")
    } else if v > 0.0 {
        serde_json::json!("inf")
    } else {
        serde_json::json!("-inf")
    }
}

fn repr(v: f64) -> Repr<'static> {
    if v.is_finite() {
        Repr::Number(v)
    } else if v.is_nan() {
        Repr::Text("nan")
    } else if v > 0.0 {
        Repr::Text("inf")
    } else {
        Repr::Text("-inf")
    }
}

fn from_owned<E: de::Error>(r: OwnedRepr) -> Result<f64, E> {
    match r {
        OwnedRepr::Number(v) => Ok(v),
        OwnedRepr::Text(s) => {
            parse_float(&s).ok_or_else(|| E::custom(format!("invalid number `{s}`")))
        }
    }
}

/// `#[serde(with = "float")]` for `f64` fields.
pub mod float {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_owned(OwnedRepr::deserialize(d)?)
    }
}

/// `#[serde(with = "float_vec")]` for `Vec<f64>` fields.
pub mod float_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| repr(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<OwnedRepr>::deserialize(d)?
            .into_iter()
            .map(from_owned)
            .collect()
    }
}

/// `#[serde(with = "float_pair")]` for `(f64, f64)` fields.
pub mod float_pair {
    use super::*;

    pub fn serialize<S: Serializer>(v: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
        (repr(v.0), repr(v.1)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        let (a, b) = <(OwnedRepr, OwnedRepr)>::deserialize(d)?;
        Ok((from_owned(a)?, from_owned(b)?))
    }
}
