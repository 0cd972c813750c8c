//! Shared numeric text conventions for the path, filter and trace files:
//! comma-separated decimals with 17 significant digits, LF line endings.

use crate::error::{Error, Result};

/// 17 significant digits; parses back to the identical `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_row(values: &[f64]) -> String {
    let mut line = String::with_capacity(values.len() * 24);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(&fmt_f64(*v));
    }
    line
}

pub fn parse_f64(token: &str, field: &str) -> Result<f64> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::format(field, format!("`{}` is not a number", token.trim())))
}

pub fn parse_row(line: &str, field: &str, expected_len: usize) -> Result<Vec<f64>> {
    let values = line
        .split(',')
        .map(|tok| parse_f64(tok, field))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected_len {
        return Err(Error::format(
            field,
            format!("expected {expected_len} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

pub fn parse_usize(token: Option<&str>, field: &str) -> Result<usize> {
    let token = token.ok_or_else(|| Error::format(field, "missing value"))?;
    token
        .parse::<usize>()
        .map_err(|_| Error::format(field, format!("`{token}` is not a non-negative integer")))
}
