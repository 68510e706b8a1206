//! Flat `key = value` run configuration files (TOML syntax, no tables).

use std::collections::BTreeSet;
use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};

pub struct FlatConfig {
    table: Table,
    used: BTreeSet<String>,
}

fn field_err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::param(format!("config field `{key}`: {msg}"))
}

impl FlatConfig {
    pub fn empty() -> Self {
        Self {
            table: Table::new(),
            used: BTreeSet::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            Error::param(format!("malformed config: {}", e.message()))
        })?;
        if let Some((k, _)) = table.iter().find(|(_, v)| v.is_table()) {
            return Err(field_err(
                k,
                "nested tables are not supported; use flat keys",
            ));
        }
        Ok(Self {
            table,
            used: BTreeSet::new(),
        })
    }

    fn get(&mut self, key: &str) -> Option<Value> {
        let v = self.table.get(key).cloned();
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    pub fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(f)),
            Some(Value::Integer(i)) => Ok(Some(i as f64)),
            Some(other) => Err(field_err(
                key,
                format!("expected a number, got {}", other.type_str()),
            )),
        }
    }

    pub fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as usize)),
            Some(other) => Err(field_err(
                key,
                format!("expected a non-negative integer, got {other}"),
            )),
        }
    }

    pub fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(other) => Err(field_err(
                key,
                format!("expected a non-negative integer, got {other}"),
            )),
        }
    }

    pub fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(b)),
            Some(other) => Err(field_err(
                key,
                format!("expected true or false, got {other}"),
            )),
        }
    }

    pub fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(field_err(key, format!("expected a string, got {other}"))),
        }
    }

    /// Either a comma-separated string or an array of strings.
    pub fn string_list(&mut self, key: &str) -> Result<Option<Vec<String>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(split_list(&s))),
            Some(Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s),
                    other => Err(field_err(key, format!("expected strings, found {other}"))),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(other) => Err(field_err(
                key,
                format!("expected a list of strings, got {other}"),
            )),
        }
    }

    pub fn usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    Value::Integer(i) if i >= 0 => Ok(i as usize),
                    other => Err(field_err(
                        key,
                        format!("expected non-negative integers, found {other}"),
                    )),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(other) => Err(field_err(
                key,
                format!("expected an array of integers, got {other}"),
            )),
        }
    }

    /// Array of fixed-length numeric rows, e.g. `[[col, row, fx, fy], ...]`.
    pub fn rows(&mut self, key: &str, width: usize) -> Result<Option<Vec<Vec<f64>>>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let Value::Array(rows) = v else {
            return Err(field_err(key, "expected an array of arrays"));
        };
        rows.into_iter()
            .map(|row| {
                let Value::Array(items) = row else {
                    return Err(field_err(
                        key,
                        format!("each entry must be an array of {width} numbers"),
                    ));
                };
                if items.len() != width {
                    return Err(field_err(
                        key,
                        format!(
                            "each entry must have {width} numbers, found {}",
                            items.len()
                        ),
                    ));
                }
                items
                    .into_iter()
                    .map(|x| match x {
                        Value::Float(f) => Ok(f),
                        Value::Integer(i) => Ok(i as f64),
                        other => Err(field_err(key, format!("expected a number, found {other}"))),
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Fails on any key that no accessor asked for.
    pub fn finish(self) -> Result<()> {
        match self.table.keys().find(|k| !self.used.contains(*k)) {
            Some(k) => Err(field_err(k, "unknown key")),
            None => Ok(()),
        }
    }
}

pub fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Parses `NELYxNELX` (rows by columns, e.g. `40x80`).
pub fn parse_resolution(s: &str) -> Result<(usize, usize)> {
    let bad = || {
        Error::param(format!(
            "resolution `{s}` must look like 40x80 (rows x columns)"
        ))
    };
    let (rows, cols) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let nely = rows.trim().parse().map_err(|_| bad())?;
    let nelx = cols.trim().parse().map_err(|_| bad())?;
    Ok((nely, nelx))
}
