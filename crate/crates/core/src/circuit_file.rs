//! `key=value` circuit description files.
//!
//! ```text
//! # Q = 1 design point
//! ib1=80u
//! is1=320u
//! ib2=80u
//! is2=2u
//! c1=5n
//! c2=5n
//! vt=25.85m      # optional
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::biquad::BiquadCircuit;
use crate::quantity::{self, QuantityError};

pub const REQUIRED_KEYS: [&str; 6] = ["ib1", "is1", "ib2", "is2", "c1", "c2"];
pub const OPTIONAL_KEYS: [&str; 1] = ["vt"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitFileError {
    #[error("line {line}: expected `key=value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {source}")]
    Value {
        line: usize,
        key: String,
        source: QuantityError,
    },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid circuit: {0}")]
    Circuit(#[from] crate::error::Error),
}

/// Parsed contents of a circuit file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitFile {
    pub ib1: f64,
    pub is1: f64,
    pub ib2: f64,
    pub is2: f64,
    pub c1: f64,
    pub c2: f64,
    /// `None` when the file has no `vt` line.
    pub vt: Option<f64>,
}

impl CircuitFile {
    pub fn parse(text: &str) -> Result<Self, CircuitFileError> {
        let mut values: BTreeMap<&str, f64> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CircuitFileError::Syntax { line, text: raw.to_string() });
            };
            let key = key.trim();
            let Some(known) = REQUIRED_KEYS
                .iter()
                .chain(OPTIONAL_KEYS.iter())
                .find(|k| **k == key)
            else {
                return Err(CircuitFileError::UnknownKey { line, key: key.to_string() });
            };
            let v = quantity::parse(value).map_err(|source| CircuitFileError::Value {
                line,
                key: key.to_string(),
                source,
            })?;
            if values.insert(known, v).is_some() {
                return Err(CircuitFileError::DuplicateKey { line, key: key.to_string() });
            }
        }
        let get = |k: &'static str| values.get(k).copied().ok_or(CircuitFileError::MissingKey(k));
        Ok(Self {
            ib1: get("ib1")?,
            is1: get("is1")?,
            ib2: get("ib2")?,
            is2: get("is2")?,
            c1: get("c1")?,
            c2: get("c2")?,
            vt: values.get("vt").copied(),
        })
    }

    pub fn from_circuit(c: &BiquadCircuit) -> Self {
        Self {
            ib1: c.ccccta1.i_b,
            is1: c.ccccta1.i_s,
            ib2: c.ccccta2.i_b,
            is2: c.ccccta2.i_s,
            c1: c.c1,
            c2: c.c2,
            vt: Some(c.ccccta1.v_t),
        }
    }

    /// Builds the circuit, using `default_vt` when the file has no `vt`.
    pub fn circuit(&self, default_vt: f64) -> Result<BiquadCircuit, CircuitFileError> {
        let vt = self.vt.unwrap_or(default_vt);
        Ok(BiquadCircuit::from_currents(
            self.ib1, self.is1, self.ib2, self.is2, self.c1, self.c2, vt,
        )?)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let fields = [
            ("ib1", self.ib1),
            ("is1", self.is1),
            ("ib2", self.ib2),
            ("is2", self.is2),
            ("c1", self.c1),
            ("c2", self.c2),
        ];
        for (k, v) in fields {
            let _ = writeln!(out, "{k}={}", quantity::render(v));
        }
        if let Some(vt) = self.vt {
            let _ = writeln!(out, "vt={}", quantity::render(vt));
        }
        out
    }
}
