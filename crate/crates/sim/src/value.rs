//! Payload values and their checks against topic field formats.

use std::collections::BTreeMap;
use std::fmt;

use qparch_adl::{parse_duration, FormatType, TopicSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Bool(b) => f64::from(u8::from(b)),
            Value::Int(i) => i as f64,
            Value::Float(f) => f,
        }
    }

    pub fn as_bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Int(i) => i != 0,
            Value::Float(f) => f != 0.0,
        }
    }

    /// Inverse of `Display`; integers win over floats.
    pub fn parse(text: &str) -> Option<Value> {
        match text {
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            _ => text.parse::<i64>().map(Value::Int).ok().or_else(|| text.parse::<f64>().ok().map(Value::Float)),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 => write!(f, "{x:.1}"),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}
impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}
impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

/// Field name → value.
pub type Payload = BTreeMap<String, Value>;

/// Why a value does not fit a field.
pub fn check_value(format: FormatType, value: Value) -> Result<(), String> {
    match (format, value) {
        (FormatType::Bool, Value::Bool(_)) => Ok(()),
        (f, Value::Int(i)) if f.int_range().is_some() => {
            let (lo, hi) = f.int_range().unwrap();
            if (lo..=hi).contains(&i128::from(i)) {
                Ok(())
            } else {
                Err(format!("{i} out of range for {f}"))
            }
        }
        (FormatType::Duration | FormatType::Time, Value::Int(i)) if i >= 0 => Ok(()),
        (FormatType::Float32, Value::Float(x)) if x.is_nan() || x.abs() <= f64::from(f32::MAX) => Ok(()),
        (FormatType::Float32, Value::Float(x)) => Err(format!("{x} out of range for float32")),
        (FormatType::Float64, Value::Float(_)) => Ok(()),
        (f, Value::Int(i)) if f.is_float() => {
            if f == FormatType::Float64 || (i as f64).abs() <= f64::from(f32::MAX) {
                Ok(())
            } else {
                Err(format!("{i} out of range for {f}"))
            }
        }
        (f, v) => Err(format!("{v} does not fit {f}")),
    }
}

fn default_value(format: FormatType, word: Option<&str>) -> Option<Value> {
    let word = word.unwrap_or("");
    Some(match format {
        FormatType::Bool => Value::Bool(word == "true"),
        FormatType::Duration | FormatType::Time => Value::Int(parse_duration(word).ok().and_then(|d| i64::try_from(d).ok()).unwrap_or(0)),
        f if f.is_float() => Value::Float(word.parse().unwrap_or(0.0)),
        f if f.int_range().is_some() => Value::Int(word.parse().unwrap_or(0)),
        _ => return None,
    })
}

/// Declared defaults of every scalar field; array and struct fields are not simulated.
pub fn default_payload(topic: &TopicSpec) -> Payload {
    topic
        .fields
        .iter()
        .filter_map(|f| default_value(f.format, f.default_word()).map(|v| (f.name.clone(), v)))
        .collect()
}

/// Check every field of `payload` against the topic; first problem wins.
pub fn check_payload(topic: &TopicSpec, payload: &Payload) -> Result<(), String> {
    for (name, value) in payload {
        let field = topic.fields.iter().find(|f| &f.name == name).ok_or_else(|| format!("{}.{name}: no such field", topic.name))?;
        check_value(field.format, *value).map_err(|why| format!("{}.{name}: {why}", topic.name))?;
    }
    Ok(())
}
