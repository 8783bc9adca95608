use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ShadowError, ShadowMeta, ShadowRecord, ShadowResult, ShadowSet};
use crate::sim::run::{bits_to_string, string_to_bits};
use crate::sim::NoiseModel;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    version: u64,
    n: usize,
    #[serde(rename = "T")]
    t: usize,
    seed: Option<u64>,
    state_desc: String,
    noise: NoiseModel,
}

#[derive(Deserialize)]
struct Line {
    t: usize,
    b: String,
    u: Vec<[f64; 3]>,
}

fn format_err(e: impl std::fmt::Display) -> ShadowError {
    ShadowError::Format(e.to_string())
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// Writes `set` as JSON Lines through a temporary file and an atomic rename.
pub fn save(set: &ShadowSet, path: &Path) -> ShadowResult<()> {
    let header = Header {
        version: FORMAT_VERSION,
        n: set.n_qubits,
        t: set.len(),
        seed: set.meta.seed,
        state_desc: set.meta.state_desc.clone(),
        noise: set.meta.noise,
    };
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        writeln!(w, "{}", serde_json::to_string(&header).map_err(format_err)?)?;
        let mut line = String::new();
        for (t, r) in set.records.iter().enumerate() {
            line.clear();
            write!(line, "{{\"t\":{t},\"b\":\"{}\",\"u\":[", bits_to_string(r.bits, set.n_qubits)).unwrap();
            for (q, a) in r.angles.iter().enumerate() {
                if q > 0 {
                    line.push(',');
                }
                write!(line, "[{:.16e},{:.16e},{:.16e}]", a[0], a[1], a[2]).unwrap();
            }
            line.push_str("]}");
            writeln!(w, "{line}")?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> ShadowResult<ShadowSet> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let first = lines.next().ok_or_else(|| ShadowError::Format("empty file".into()))??;
    let value: serde_json::Value = serde_json::from_str(&first).map_err(format_err)?;
    let version = value.get("version").and_then(|v| v.as_u64()).ok_or_else(|| ShadowError::Format("missing version".into()))?;
    if version != FORMAT_VERSION {
        return Err(ShadowError::Version(version));
    }
    let header: Header = serde_json::from_value(value).map_err(format_err)?;
    let mut records = Vec::with_capacity(header.t);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Line = serde_json::from_str(&line).map_err(format_err)?;
        if rec.t != records.len() {
            return Err(ShadowError::Format(format!("record index {} out of order", rec.t)));
        }
        if rec.u.len() != header.n || rec.b.len() != header.n {
            return Err(ShadowError::Format(format!("record {} does not have {} qubits", rec.t, header.n)));
        }
        let bits = string_to_bits(&rec.b, header.n)?;
        records.push(ShadowRecord { bits, angles: rec.u });
    }
    if records.len() != header.t {
        return Err(ShadowError::Format(format!("expected {} records, found {}", header.t, records.len())));
    }
    let meta = ShadowMeta { seed: header.seed, state_desc: header.state_desc, noise: header.noise };
    ShadowSet::new(header.n, records, meta)
}
