//! Plain-text parameter files.
//!
//! ```text
//! regressgan-checkpoint 1
//! kind generator
//! config_hash 3f9a...
//! meta noise_dim 10
//! array layer0.weight 35 64
//! <values, space separated, shortest round-trip exponent form>
//! ```
//!
//! Floats are written with `{:e}`, which Rust guarantees to parse back to the
//! identical bit pattern.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "regressgan-checkpoint 1";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("checkpoint is missing {0}")]
    Missing(String),
    #[error("checkpoint holds a {found} model, expected {expected}")]
    Kind { expected: String, found: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub kind: String,
    pub config_hash: String,
    pub meta: BTreeMap<String, String>,
    pub arrays: Vec<NamedArray>,
}

impl Checkpoint {
    pub fn new(kind: &str, config_hash: &str) -> Self {
        Self { kind: kind.to_string(), config_hash: config_hash.to_string(), ..Self::default() }
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn push_array(&mut self, name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) {
        self.arrays.push(NamedArray { name: name.into(), shape, values });
    }

    pub fn meta_value<T: std::str::FromStr>(&self, key: &str) -> Result<T, CheckpointError> {
        self.meta
            .get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CheckpointError::Missing(format!("meta {key}")))
    }

    pub fn array(&self, name: &str) -> Result<&NamedArray, CheckpointError> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| CheckpointError::Missing(format!("array {name}")))
    }

    pub fn expect_kind(&self, expected: &str) -> Result<(), CheckpointError> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(CheckpointError::Kind { expected: expected.to_string(), found: self.kind.clone() })
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "kind {}", self.kind).unwrap();
        writeln!(s, "config_hash {}", self.config_hash).unwrap();
        for (k, v) in &self.meta {
            writeln!(s, "meta {k} {v}").unwrap();
        }
        for a in &self.arrays {
            let dims: Vec<String> = a.shape.iter().map(|d| d.to_string()).collect();
            writeln!(s, "array {} {}", a.name, dims.join(" ")).unwrap();
            let vals: Vec<String> = a.values.iter().map(|v| format!("{v:e}")).collect();
            writeln!(s, "{}", vals.join(" ")).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CheckpointError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let bad = |line: usize, msg: &str| CheckpointError::Format { line, msg: msg.to_string() };
        match lines.next() {
            Some((_, l)) if l == MAGIC => {}
            _ => return Err(bad(1, "missing header")),
        }
        let mut ck = Checkpoint::default();
        while let Some((n, line)) = lines.next() {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("kind") => ck.kind = parts.next().ok_or_else(|| bad(n, "empty kind"))?.to_string(),
                Some("config_hash") => ck.config_hash = parts.next().unwrap_or("").to_string(),
                Some("meta") => {
                    let key = parts.next().ok_or_else(|| bad(n, "meta without key"))?;
                    let value = parts.collect::<Vec<_>>().join(" ");
                    ck.meta.insert(key.to_string(), value);
                }
                Some("array") => {
                    let name = parts.next().ok_or_else(|| bad(n, "array without name"))?.to_string();
                    let shape = parts
                        .map(|d| d.parse::<usize>().map_err(|_| bad(n, "bad dimension")))
                        .collect::<Result<Vec<_>, _>>()?;
                    let (vn, vline) = lines.next().ok_or_else(|| bad(n + 1, "missing values"))?;
                    let values = vline
                        .split_whitespace()
                        .map(|v| v.parse::<f64>().map_err(|_| bad(vn, "bad value")))
                        .collect::<Result<Vec<_>, _>>()?;
                    if values.len() != shape.iter().product::<usize>() {
                        return Err(bad(vn, "value count does not match shape"));
                    }
                    ck.arrays.push(NamedArray { name, shape, values });
                }
                None => {}
                Some(other) => return Err(bad(n, &format!("unknown record {other}"))),
            }
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
