//! Bits shared by the line-oriented machine and table formats.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numstream::check_base;

/// Non-blank, non-comment lines with their 1-based line numbers.
pub fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// `key=value` tokens separated by whitespace.
pub fn header_fields(line: usize, text: &str) -> Result<HashMap<&str, &str>> {
    let mut fields = HashMap::new();
    for tok in text.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected key=value, got `{tok}`")))?;
        if fields.insert(k, v).is_some() {
            return Err(Error::parse(line, format!("duplicate `{k}`")));
        }
    }
    Ok(fields)
}

pub fn required<'a>(fields: &HashMap<&str, &'a str>, key: &str, line: usize) -> Result<&'a str> {
    fields
        .get(key)
        .copied()
        .ok_or_else(|| Error::parse(line, format!("missing `{key}=`")))
}

pub fn parse_base(text: &str, line: usize) -> Result<u32> {
    let base: u32 = text
        .parse()
        .map_err(|_| Error::parse(line, format!("bad base `{text}`")))?;
    check_base(base).map_err(|e| Error::parse(line, e.to_string()))?;
    Ok(base)
}

pub fn parse_digit(text: &str, base: u32, line: usize) -> Result<u8> {
    text.parse::<u32>()
        .ok()
        .filter(|&d| d < base)
        .map(|d| d as u8)
        .ok_or_else(|| Error::parse(line, format!("`{text}` is not a base-{base} digit")))
}

/// A digit string: `-` for empty, packed characters for bases up to 10,
/// comma-separated integers above.
pub fn parse_digit_string(text: &str, base: u32, line: usize) -> Result<Vec<u8>> {
    if text == "-" {
        return Ok(Vec::new());
    }
    if base <= 10 {
        text.chars()
            .map(|c| {
                c.to_digit(10)
                    .filter(|&d| d < base)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::parse(line, format!("`{c}` is not a base-{base} digit")))
            })
            .collect()
    } else {
        text.split(',')
            .map(|t| parse_digit(t, base, line))
            .collect()
    }
}

pub fn format_digit_string(digits: &[u8], base: u32) -> String {
    if digits.is_empty() {
        "-".to_string()
    } else if base <= 10 {
        digits.iter().map(|&d| char::from(b'0' + d)).collect()
    } else {
        let parts: Vec<String> = digits.iter().map(u8::to_string).collect();
        parts.join(",")
    }
}
