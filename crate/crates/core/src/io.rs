//! Plain file formats: CSV with 17 significant digits, JSON sidecars and a
//! binary columnar ensemble file.

use crate::error::{Error, Result};
use crate::stats::{Histogram, PulseEnsemble};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

/// Round-trip-exact decimal form of an f64.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        // keeps -0 and 0 distinct only where it matters: never here
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

/// CSV text: optional `# ...` comment line, a header, then rows.
pub fn csv_string(comment: Option<&str>, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = String::new();
    if let Some(c) = comment {
        let _ = writeln!(s, "# {c}");
    }
    let _ = writeln!(s, "{}", header.join(","));
    for r in rows {
        let line: Vec<String> = r.into_iter().map(fmt17).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

/// Parse numeric CSV produced by [`csv_string`]; returns header and rows.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?
        .split(',')
        .map(|h| h.trim().to_string())
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row = l
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!("row {} has {} fields", i + 1, row.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn histogram_csv(h: &Histogram) -> String {
    csv_string(
        None,
        &["bin_lo", "bin_hi", "probability"],
        h.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| vec![h.edges[i], h.edges[i + 1], p]),
    )
}

const MAGIC: &[u8; 8] = b"BSVENS01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EnsembleHeader {
    channels: Vec<String>,
    len: usize,
    seed: Option<u64>,
    meta: BTreeMap<String, String>,
}

/// Magic, u64 header length, JSON header, then each channel as
/// little-endian f64 in channel order.
pub fn write_ensemble<W: Write>(mut w: W, e: &PulseEnsemble) -> Result<()> {
    let header = EnsembleHeader {
        channels: e.channels.clone(),
        len: e.len(),
        seed: e.seed,
        meta: e.meta.clone(),
    };
    let h = serde_json::to_vec(&header).map_err(|e| Error::Parse(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(h.len() as u64).to_le_bytes())?;
    w.write_all(&h)?;
    for col in &e.data {
        let mut buf = Vec::with_capacity(col.len() * 8);
        for v in col {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_ensemble<R: Read>(mut r: R) -> Result<PulseEnsemble> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not an ensemble file".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let mut h = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut h)?;
    let header: EnsembleHeader = serde_json::from_slice(&h).map_err(|e| Error::Parse(e.to_string()))?;
    let mut cols = Vec::with_capacity(header.channels.len());
    for name in &header.channels {
        let mut buf = vec![0u8; header.len * 8];
        r.read_exact(&mut buf)?;
        let col = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        cols.push((name.clone(), col));
    }
    let mut e = PulseEnsemble::new(cols, header.seed)?;
    e.meta = header.meta;
    Ok(e)
}

pub fn save_ensemble(path: &Path, e: &PulseEnsemble) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_ensemble(std::io::BufWriter::new(std::fs::File::create(path)?), e)
}

pub fn load_ensemble(path: &Path) -> Result<PulseEnsemble> {
    read_ensemble(std::io::BufReader::new(std::fs::File::open(path)?))
}
