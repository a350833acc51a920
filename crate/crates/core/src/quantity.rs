//! Decimal numbers with an optional SI suffix: `5n`, `80u`, `25.85m`, `10M`.
//!
//! Suffixes are case-sensitive: `m` is milli (1e-3) and `M` is mega (1e6).
//! Scaling is done by shifting the decimal exponent in the text, so
//! `parse(render(x)) == x` holds bit for bit.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const SUFFIXES: [(char, i32); 6] = [('p', -12), ('n', -9), ('u', -6), ('m', -3), ('k', 3), ('M', 6)];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantityError {
    #[error("empty value")]
    Empty,
    #[error("`{0}` is not a number with an optional p/n/u/m/k/M suffix")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Quantity(pub f64);

impl Quantity {
    pub fn value(self) -> f64 {
        self.0
    }
}

fn suffix_exponent(c: char) -> Option<i32> {
    SUFFIXES.iter().find(|(s, _)| *s == c).map(|(_, e)| *e)
}

fn is_plain_number(s: &str) -> bool {
    !s.is_empty()
        && s.chars().any(|c| c.is_ascii_digit())
        && s.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
}

pub fn parse(text: &str) -> Result<f64, QuantityError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(QuantityError::Empty);
    }
    let malformed = || QuantityError::Malformed(s.to_string());
    let last = s.chars().last().ok_or(QuantityError::Empty)?;
    let (body, shift) = match suffix_exponent(last) {
        Some(e) => (&s[..s.len() - last.len_utf8()], e),
        None => (s, 0),
    };
    if !is_plain_number(body) {
        return Err(malformed());
    }
    let value = if shift == 0 {
        body.parse::<f64>().map_err(|_| malformed())?
    } else {
        let (mantissa, exp) = match body.find(['e', 'E']) {
            Some(i) => (&body[..i], body[i + 1..].parse::<i32>().map_err(|_| malformed())?),
            None => (body, 0),
        };
        if mantissa.contains(['e', 'E']) || mantissa.is_empty() {
            return Err(malformed());
        }
        format!("{mantissa}e{}", exp + shift)
            .parse::<f64>()
            .map_err(|_| malformed())?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(malformed())
    }
}

/// Shortest text that parses back to exactly `value`, using an SI suffix
/// when the engineering exponent is between -12 and 6.
pub fn render(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    // `{:e}` gives the shortest round-trip digits as d.ddd e N
    let sci = format!("{value:e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let eng = exp.div_euclid(3) * 3;
    let suffix = match eng {
        0 => Some(None),
        e => SUFFIXES.iter().find(|(_, x)| *x == e).map(|(c, _)| Some(*c)),
    };
    let Some(suffix) = suffix else {
        return sci;
    };
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let int_len = (exp - eng) as usize + 1;
    let mut int_part: String = digits.chars().take(int_len).collect();
    while int_part.len() < int_len {
        int_part.push('0');
    }
    let frac_part: String = digits.chars().skip(int_len).collect();
    let mut out = format!("{sign}{int_part}");
    if !frac_part.is_empty() {
        out.push('.');
        out.push_str(&frac_part);
    }
    if let Some(c) = suffix {
        out.push(c);
    }
    out
}

impl FromStr for Quantity {
    type Err = QuantityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s).map(Quantity)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self.0))
    }
}
