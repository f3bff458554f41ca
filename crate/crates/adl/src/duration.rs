//! Duration literals: `<number>(usec|msec|sec)`, normalised to integer
//! microseconds. Fractions are accepted when they land on a whole microsecond.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DurationError(pub String);

impl fmt::Display for DurationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed duration literal '{}'", self.0)
    }
}

const UNITS: [(&str, u64); 3] = [("usec", 1), ("msec", 1_000), ("sec", 1_000_000)];

/// Parse a duration literal to microseconds.
pub fn parse_duration(text: &str) -> Result<u64, DurationError> {
    let err = || DurationError(text.to_string());
    let split = text.find(|c: char| c.is_ascii_alphabetic()).ok_or_else(err)?;
    let (num, unit) = text.split_at(split);
    let scale = UNITS.iter().find(|(u, _)| *u == unit).map(|(_, s)| *s).ok_or_else(err)?;
    let (int_part, frac_part) = match num.split_once('.') {
        Some((i, f)) => (i, f),
        None => (num, ""),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    if !frac_part.bytes().all(|b| b.is_ascii_digit()) || (num.contains('.') && frac_part.is_empty()) {
        return Err(err());
    }
    let whole: u64 = int_part.parse().map_err(|_| err())?;
    let mut us = whole.checked_mul(scale).ok_or_else(err)?;
    // fractional digits must resolve to whole microseconds
    let mut place = scale;
    for d in frac_part.bytes() {
        let digit = u64::from(d - b'0');
        if place % 10 != 0 {
            if digit != 0 {
                return Err(err());
            }
            continue;
        }
        place /= 10;
        us = us.checked_add(digit * place).ok_or_else(err)?;
    }
    Ok(us)
}

/// True when the word looks like an attempted duration (leading digit,
/// trailing letters), so a failed parse should be reported rather than
/// treated as a name.
pub fn looks_like_duration(text: &str) -> bool {
    text.starts_with(|c: char| c.is_ascii_digit()) && text.ends_with(|c: char| c.is_ascii_alphabetic())
}

/// Canonical literal: the largest unit that divides the value exactly.
pub fn format_duration(us: u64) -> String {
    if us != 0 && us.is_multiple_of(1_000_000) {
        format!("{}sec", us / 1_000_000)
    } else if us != 0 && us.is_multiple_of(1_000) {
        format!("{}msec", us / 1_000)
    } else {
        format!("{us}usec")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units() {
        assert_eq!(parse_duration("50msec"), Ok(50_000));
        assert_eq!(parse_duration("1msec"), Ok(1_000));
        assert_eq!(parse_duration("2sec"), Ok(2_000_000));
        assert_eq!(parse_duration("7usec"), Ok(7));
        assert_eq!(parse_duration("0.5sec"), Ok(500_000));
        assert_eq!(parse_duration("1.25msec"), Ok(1_250));
    }

    #[test]
    fn malformed() {
        for bad in ["50", "msec", "50ms", "50msecs", "1.5usec", "-1msec", "1.msec", ".5sec", "1e3msec"] {
            assert!(parse_duration(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn canonical_form_round_trips() {
        for us in [0, 1, 999, 1_000, 1_500, 50_000, 1_000_000, 2_500_000] {
            assert_eq!(parse_duration(&format_duration(us)), Ok(us));
        }
        assert_eq!(format_duration(50_000), "50msec");
    }
}
