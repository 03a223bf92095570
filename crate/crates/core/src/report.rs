//! Run reports: an ordered list of `key=value` lines.
//!
//! Floats are printed in scientific notation with 12 significant digits and
//! stored already rounded, so a report reparsed from its own text compares
//! equal to the original. Reports carry no timing information and are
//! byte-identical across reruns with the same inputs and seed.

use std::fmt;

use serde_json::{Map, Value as Json};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(u64),
    Float(f64),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float(v) => Some(*v),
            Value::Int(v) => Some(*v as f64),
            Value::Text(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    fn parse(text: &str) -> Value {
        if !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(v) = text.parse() {
                return Value::Int(v);
            }
        }
        if is_float_literal(text) {
            if let Ok(v) = text.parse() {
                return Value::Float(v);
            }
        }
        Value::Text(text.to_string())
    }
}

/// `-?d.ddddddddddde-?d+`, the shape produced by [`format_float`].
fn is_float_literal(s: &str) -> bool {
    let s = s.strip_prefix('-').unwrap_or(s);
    let Some((mantissa, exp)) = s.split_once('e') else {
        return false;
    };
    let exp = exp.strip_prefix('-').unwrap_or(exp);
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    match mantissa.split_once('.') {
        Some((a, b)) => a.len() == 1 && digits(a) && b.len() == 11 && digits(b) && digits(exp),
        None => false,
    }
}

/// 12 significant digits, scientific notation; negative zero prints as zero.
pub fn format_float(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

fn round12(v: f64) -> f64 {
    format_float(v).parse().unwrap_or(v)
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => f.write_str(&format_float(*v)),
            Value::Text(s) => f.write_str(s),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    command: String,
    entries: Vec<(String, Value)>,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            entries: Vec::new(),
        }
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    fn push(&mut self, key: &str, value: Value) {
        debug_assert!(!key.contains('=') && !key.contains('\n'));
        self.entries.push((key.to_string(), value));
    }

    /// Non-finite values are recorded as text.
    pub fn float(&mut self, key: &str, v: f64) -> &mut Self {
        let value = if v.is_finite() {
            Value::Float(round12(v))
        } else {
            Value::Text(v.to_string())
        };
        self.push(key, value);
        self
    }

    pub fn int(&mut self, key: &str, v: u64) -> &mut Self {
        self.push(key, Value::Int(v));
        self
    }

    pub fn text(&mut self, key: &str, v: impl Into<String>) -> &mut Self {
        let v: String = v.into();
        debug_assert!(!v.contains('\n'));
        self.push(key, Value::Text(v));
        self
    }

    /// Records `input.<name>.sha256`.
    pub fn digest(&mut self, name: &str, bytes: &[u8]) -> &mut Self {
        self.text(&format!("input.{name}.sha256"), sha256_hex(bytes))
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("command={}\n", self.command);
        for (k, v) in &self.entries {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let command = match lines.next() {
            Some((_, l)) => l
                .strip_prefix("command=")
                .ok_or_else(|| Error::parse(1, "report must start with `command=`"))?,
            None => return Err(Error::parse(1, "empty report")),
        };
        let mut report = RunReport::new(command);
        for (i, line) in lines {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected `key=value`"))?;
            report.entries.push((k.to_string(), Value::parse(v)));
        }
        Ok(report)
    }

    /// JSON object with keys in sorted order.
    pub fn to_json(&self) -> String {
        let mut map = Map::new();
        map.insert("command".into(), Json::String(self.command.clone()));
        for (k, v) in &self.entries {
            let j = match v {
                Value::Int(i) => Json::from(*i),
                Value::Float(f) => Json::from(*f),
                Value::Text(s) => Json::String(s.clone()),
            };
            map.insert(k.clone(), j);
        }
        let mut s = serde_json::to_string_pretty(&Json::Object(map)).expect("report serializes");
        s.push('\n');
        s
    }
}
