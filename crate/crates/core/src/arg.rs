use std::fmt;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::workbook::Value;

/// Argument of an intended function, read from a legend cell (usually a year).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arg {
    Number(Decimal),
    Text(String),
}

impl Arg {
    /// Numbers stay numbers, any other text is kept verbatim.
    pub fn parse(text: &str) -> Self {
        match crate::num::parse(text) {
            Ok(n) => Arg::Number(n),
            Err(_) => Arg::Text(text.to_string()),
        }
    }

    pub fn from_value(value: &Value) -> Option<Self> {
        match value {
            Value::Empty => None,
            Value::Number(n) => Some(Arg::Number(*n)),
            Value::Text(t) => Some(Arg::parse(t.trim())),
        }
    }

    pub fn as_number(&self) -> Option<Decimal> {
        match self {
            Arg::Number(n) => Some(*n),
            Arg::Text(_) => None,
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Number(n) => write!(f, "{}", n.normalize()),
            Arg::Text(t) => f.write_str(t),
        }
    }
}

impl From<i64> for Arg {
    fn from(n: i64) -> Self {
        Arg::Number(Decimal::from(n))
    }
}

impl Serialize for Arg {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Arg::Number(n) => crate::num::serialize(n, serializer),
            Arg::Text(t) => serializer.serialize_str(t),
        }
    }
}

impl<'de> Deserialize<'de> for Arg {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Str(String),
        }
        Ok(match Raw::deserialize(deserializer)? {
            Raw::Int(i) => Arg::Number(Decimal::from(i)),
            Raw::Float(f) => Arg::Number(crate::num::parse(&f.to_string()).map_err(serde::de::Error::custom)?),
            Raw::Str(s) => Arg::Text(s),
        })
    }
}
