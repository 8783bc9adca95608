//! Atomic artifact writers. Every table carries `seed` and `config_hash` columns.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::sha256_hex;
use crate::error::{HarnessError, HarnessResult};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> HarnessResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    shadowlab::shadows::write_atomic(path, bytes).map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> HarnessResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::stage("write", e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> HarnessResult<T> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| HarnessError::stage("read", format!("{}: {e}", path.display())))
}

pub fn file_sha256(path: &Path) -> HarnessResult<String> {
    Ok(sha256_hex(&std::fs::read(path).map_err(|e| HarnessError::io(path, e))?))
}

/// A CSV table under construction.
#[derive(Clone, Debug)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(headers: &[S]) -> Self {
        Self { headers: headers.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path, seed: u64, config_hash: &str) -> HarnessResult<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| HarnessError::stage("write", e);
        let mut header = self.headers.clone();
        header.extend(["seed".to_string(), "config_hash".to_string()]);
        w.write_record(&header).map_err(err)?;
        for row in &self.rows {
            let mut r = row.clone();
            r.extend([seed.to_string(), config_hash.to_string()]);
            w.write_record(&r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::stage("write", e))?;
        write_atomic(path, &bytes)?;
        Ok(path.to_path_buf())
    }
}

/// Shortest round-trip decimal form, so tables reload bit-exactly.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Reads a table written by [`Table::write`] into header and string rows.
pub fn read_table(path: &Path) -> HarnessResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::stage("read", e))?;
    let headers = r.headers().map_err(|e| HarnessError::stage("read", e))?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| HarnessError::stage("read", e))?;
    Ok((headers, rows))
}

pub fn parse_f64(s: &str) -> HarnessResult<f64> {
    s.parse().map_err(|_| HarnessError::stage("read", format!("not a number: {s:?}")))
}
