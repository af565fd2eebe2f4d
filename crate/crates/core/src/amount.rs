//! Decimal-string token amounts.
//!
//! Amounts that arrive as text (snapshot weights, config values, CLI flags)
//! are parsed as exact decimals first and converted to `f64` exactly once.

use std::str::FromStr;

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmountError {
    #[error("`{0}` is not a decimal number")]
    Malformed(String),
    #[error("`{0}` is negative")]
    Negative(String),
    #[error("`{0}` is out of range")]
    OutOfRange(String),
}

/// Parses a decimal string such as `"12.5"` or `"1e6"` into a nonnegative
/// token amount.
pub fn parse_amount(text: &str) -> Result<f64, AmountError> {
    let value = parse_signed(text)?;
    if value < 0.0 {
        return Err(AmountError::Negative(text.to_string()));
    }
    Ok(value)
}

/// Like [`parse_amount`] but allows negative values.
pub fn parse_signed(text: &str) -> Result<f64, AmountError> {
    let trimmed = text.trim();
    let dec = Decimal::from_str(trimmed)
        .or_else(|_| Decimal::from_scientific(trimmed))
        .map_err(|err| match err {
            rust_decimal::Error::ExceedsMaximumPossibleValue | rust_decimal::Error::LessThanMinimumPossibleValue => {
                AmountError::OutOfRange(text.to_string())
            }
            _ => AmountError::Malformed(text.to_string()),
        })?;
    dec.to_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| AmountError::OutOfRange(text.to_string()))
}

/// Shortest decimal rendering that parses back to the same `f64`.
pub fn format_amount(value: f64) -> String {
    format!("{value}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_and_scientific() {
        assert_eq!(parse_amount("12.5").unwrap(), 12.5);
        assert_eq!(parse_amount("1e6").unwrap(), 1e6);
        assert_eq!(parse_amount(" 0 ").unwrap(), 0.0);
        assert_eq!(parse_amount("0.000000000000000001").unwrap(), 1e-18);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_amount("-1"), Err(AmountError::Negative(_))));
        assert!(matches!(parse_amount("abc"), Err(AmountError::Malformed(_))));
        assert!(parse_amount("inf").is_err());
        assert!(parse_amount("NaN").is_err());
        assert_eq!(parse_signed("-2.5").unwrap(), -2.5);
    }

    #[test]
    fn format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e21, 123456.789] {
            assert_eq!(parse_amount(&format_amount(v)).unwrap(), v);
        }
    }
}
