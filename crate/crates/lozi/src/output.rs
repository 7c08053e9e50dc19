//! CSV tables, flat JSON metadata and atomic file writes.
//!
//! Tables are RFC 4180 with a header row. `f64` cells use the shortest
//! representation that parses back to the same double; double-double cells
//! carry at least 34 significant digits.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::extprec::{DDReal, Real};
use crate::segments::CrossingEvent;
use crate::stats::ScalarEstimate;

/// Shortest round-trip decimal.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn fmt_dd(x: DDReal) -> String {
    x.to_decimal_string(34)
}

/// A table built in memory and serialized in one go.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        CsvTable { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row; panics if its width differs from the header's.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| fmt_f64(x)).collect());
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Parses a table written by [`CsvTable::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, csv::Error> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r.records().map(|rec| rec.map(|r| r.iter().map(str::to_string).collect())).collect::<Result<_, _>>()?;
        Ok(CsvTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn write(&self, path: &Path) -> io::Result<String> {
        let bytes = self.to_bytes();
        write_atomic(path, &bytes)?;
        Ok(content_hash(&bytes))
    }
}

/// Appends `name` and `name_se` cells.
pub fn estimate_cells(e: &ScalarEstimate) -> [String; 2] {
    [fmt_f64(e.mean), fmt_f64(e.std_err)]
}

/// One row per crossing: `step, s_y, seg_length, vu_e1, weight`.
pub fn events_table<R: Real>(events: &[CrossingEvent<R>]) -> CsvTable {
    let mut t = CsvTable::new(&["step", "s_y", "seg_length", "vu_e1", "weight"]);
    for e in events {
        t.push(vec![e.step_index.to_string(), e.s.y.to_text(), e.seg_length.to_text(), e.vu_e1.to_text(), e.weight.to_text()]);
    }
    t
}

/// Git-style blob hash: SHA-256 of `"blob <len>\0" ++ content`, in hex.
pub fn content_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes to a temporary file in the target directory and renames it into
/// place, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Flat key-value metadata. Nested objects are flattened to dotted keys.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Metadata(BTreeMap<String, Value>);

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<T: Serialize + ?Sized>(&mut self, key: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.flatten(key, v);
    }

    fn flatten(&mut self, key: &str, v: Value) {
        match v {
            Value::Object(m) => {
                for (k, v) in m {
                    self.flatten(&format!("{key}.{k}"), v);
                }
            }
            v => {
                self.0.insert(key.to_string(), v);
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = serde_json::to_vec_pretty(&self.0).expect("metadata serializes");
        b.push(b'\n');
        b
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        write_atomic(path, &self.to_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_cells_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn dd_cells_have_34_digits() {
        let x = DDReal::from(1.0) / DDReal::from(3.0);
        let s = fmt_dd(x);
        assert!(s.chars().filter(|c| c.is_ascii_digit()).count() >= 34, "{s}");
    }

    #[test]
    fn quoting_follows_rfc4180() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["x,y".into(), "say \"hi\"".into()]);
        let s = String::from_utf8(t.to_bytes()).unwrap();
        assert_eq!(s, "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n");
        assert_eq!(CsvTable::from_bytes(s.as_bytes()).unwrap(), t);
    }

    #[test]
    fn blob_hash_matches_git_format() {
        // SHA-256 of "blob 0\0", the empty blob under git's sha256 object format.
        assert_eq!(content_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }

    #[test]
    fn metadata_is_flat() {
        #[derive(Serialize)]
        struct Inner {
            a: f64,
            b: [u32; 2],
        }
        let mut m = Metadata::new();
        m.insert("params", &Inner { a: 1.8, b: [1, 2] });
        m.insert("seed", &7u64);
        let keys: Vec<_> = m.keys().collect();
        assert_eq!(keys, ["params.a", "params.b", "seed"]);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("t.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 1);
    }
}
