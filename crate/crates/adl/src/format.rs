//! Topic field format tokens and the value-range rules attached to them.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormatType {
    Int8,
    Uint8,
    Int16,
    Uint16,
    Int32,
    Uint32,
    Int64,
    Uint64,
    Float32,
    Float64,
    Bool,
    Duration,
    Time,
    Array,
    Struct,
}

pub const ALL_FORMATS: [FormatType; 15] = [
    FormatType::Int8,
    FormatType::Uint8,
    FormatType::Int16,
    FormatType::Uint16,
    FormatType::Int32,
    FormatType::Uint32,
    FormatType::Int64,
    FormatType::Uint64,
    FormatType::Float32,
    FormatType::Float64,
    FormatType::Bool,
    FormatType::Duration,
    FormatType::Time,
    FormatType::Array,
    FormatType::Struct,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Signed,
    Unsigned,
    Float,
}

impl FormatType {
    pub fn token(self) -> &'static str {
        match self {
            FormatType::Int8 => "int8",
            FormatType::Uint8 => "uint8",
            FormatType::Int16 => "int16",
            FormatType::Uint16 => "uint16",
            FormatType::Int32 => "int32",
            FormatType::Uint32 => "uint32",
            FormatType::Int64 => "int64",
            FormatType::Uint64 => "uint64",
            FormatType::Float32 => "float32",
            FormatType::Float64 => "float64",
            FormatType::Bool => "bool",
            FormatType::Duration => "duration",
            FormatType::Time => "time",
            FormatType::Array => "array",
            FormatType::Struct => "struct",
        }
    }

    fn sized(self) -> Option<(Family, u32)> {
        use FormatType::*;
        Some(match self {
            Int8 => (Family::Signed, 8),
            Int16 => (Family::Signed, 16),
            Int32 => (Family::Signed, 32),
            Int64 => (Family::Signed, 64),
            Uint8 => (Family::Unsigned, 8),
            Uint16 => (Family::Unsigned, 16),
            Uint32 => (Family::Unsigned, 32),
            Uint64 => (Family::Unsigned, 64),
            Float32 => (Family::Float, 32),
            Float64 => (Family::Float, 64),
            _ => return None,
        })
    }

    /// Inclusive integer range for the integer formats.
    pub fn int_range(self) -> Option<(i128, i128)> {
        match self.sized()? {
            (Family::Signed, w) => Some((-(1i128 << (w - 1)), (1i128 << (w - 1)) - 1)),
            (Family::Unsigned, w) => Some((0, (1i128 << w) - 1)),
            (Family::Float, _) => None,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, FormatType::Float32 | FormatType::Float64)
    }
}

impl fmt::Display for FormatType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for FormatType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_FORMATS.iter().copied().find(|t| t.token() == s).ok_or_else(|| format!("unknown format type '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot compare non-sized format type {0}")]
pub struct UnsupportedComparison(pub FormatType);

/// Whether a value of `value_type` may be stored in a `slot_type` slot:
/// same signedness family and no wider.
pub fn check_subtype(value_type: FormatType, slot_type: FormatType) -> Result<bool, UnsupportedComparison> {
    let (vf, vw) = value_type.sized().ok_or(UnsupportedComparison(value_type))?;
    let (sf, sw) = slot_type.sized().ok_or(UnsupportedComparison(slot_type))?;
    Ok(vf == sf && vw <= sw)
}

/// Does the literal `text` denote a value of `ty`? `None` means the
/// format carries no scalar range (array, struct).
pub fn literal_fits(ty: FormatType, text: &str) -> Option<bool> {
    use FormatType::*;
    Some(match ty {
        Bool => matches!(text, "true" | "false"),
        Float32 => matches!(text.parse::<f64>(), Ok(v) if v.is_finite() && v.abs() <= f64::from(f32::MAX)),
        Float64 => matches!(text.parse::<f64>(), Ok(v) if v.is_finite()),
        Duration | Time => {
            crate::duration::parse_duration(text).is_ok() || text.parse::<u64>().is_ok()
        }
        Array | Struct => return None,
        int => {
            let (lo, hi) = int.int_range().expect("integer format");
            matches!(text.parse::<i128>(), Ok(v) if lo <= v && v <= hi)
        }
    })
}
