//! Binary dataset files and CSV exchange. Layouts are documented in
//! `docs/formats.md`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Dataset, ScanPair};
use crate::binio::{Reader, Writer};
use crate::{Error, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"HALD";
pub const DATASET_VERSION: u32 = 1;

impl Dataset {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(DATASET_MAGIC);
        w.u32(DATASET_VERSION);
        w.u32(self.n_points as u32);
        w.f64(self.max_range);
        w.u64(self.pairs.len() as u64);
        w.u32(self.provenance.len() as u32);
        w.bytes(self.provenance.as_bytes());
        for p in &self.pairs {
            w.f64s(&p.x);
            w.f64s(&p.y);
        }
        w.0
    }

    pub fn from_bytes(buf: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader::new(buf, path);
        let magic = r.take(4)?;
        if magic != DATASET_MAGIC {
            return Err(r.fail(format!("bad magic {magic:?}, expected \"HALD\"")));
        }
        let version = r.u32()?;
        if version != DATASET_VERSION {
            return Err(r.fail(format!(
                "unsupported dataset version {version} (this build reads {DATASET_VERSION})"
            )));
        }
        let n_points = r.u32()? as usize;
        let max_range = r.f64()?;
        let count = r.u64()? as usize;
        let note_len = r.u32()? as usize;
        let provenance = String::from_utf8(r.take(note_len)?.to_vec())
            .map_err(|_| r.fail("provenance note is not UTF-8"))?;
        if n_points == 0 || !(max_range > 0.0) {
            return Err(r.fail(format!("invalid header: N = {n_points}, s = {max_range}")));
        }
        let payload = count
            .checked_mul(2 * 8 * n_points)
            .ok_or_else(|| r.fail("pair count overflows"))?;
        if r.remaining() != payload {
            return Err(r.fail(format!(
                "header announces {count} pairs ({payload} bytes) but {} bytes follow",
                r.remaining()
            )));
        }
        let mut pairs = Vec::with_capacity(count);
        for _ in 0..count {
            let x = r.f64s(n_points)?;
            let y = r.f64s(n_points)?;
            pairs.push(ScanPair { x, y });
        }
        debug_assert!(r.finished());
        let ds = Dataset {
            n_points,
            max_range,
            provenance,
            pairs,
        };
        ds.validate().map_err(|e| r.fail(e.to_string()))?;
        Ok(ds)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&buf, path)
    }

    /// One row per pair: `N` laser readings followed by `N` obstacle
    /// distances, comma separated, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            let row: Vec<String> = p.x.iter().chain(&p.y).map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn from_csv(text: &str, max_range: f64, provenance: &str, path: &Path) -> Result<Self> {
        let rows = parse_rows(text, path)?;
        let mut pairs = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() % 2 != 0 {
                return Err(Error::format(
                    path,
                    format!("row {}: odd number of values ({})", i + 1, row.len()),
                ));
            }
            let n = row.len() / 2;
            pairs.push(ScanPair {
                x: row[..n].to_vec(),
                y: row[n..].to_vec(),
            });
        }
        Dataset::from_pairs(pairs, max_range, provenance)
            .map_err(|e| Error::format(path, e.to_string()))
    }
}

fn parse_rows(text: &str, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads one scan per non-empty line. Rows may differ in length.
pub fn read_scan_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_rows(&text, path)?;
    if rows.is_empty() {
        return Err(Error::format(path, "no scans found"));
    }
    Ok(rows)
}

pub fn write_scan_csv(path: impl AsRef<Path>, scans: &[Vec<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for s in scans {
        let row: Vec<String> = s.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
