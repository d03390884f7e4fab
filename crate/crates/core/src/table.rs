//! Delimited result tables and run manifests.
//!
//! Tables are comma-delimited UTF-8 with a header row and LF newlines.
//! Floats carry 17 significant digits so every value round-trips
//! bit-exactly through its own reader.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_float(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| CoreError::Parse(format!("not a float: {s:?}")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| CoreError::Parse("empty table".into()))?
            .split(',')
            .map(|s| s.to_string())
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let row: Vec<String> = line.split(',').map(|s| s.to_string()).collect();
            if row.len() != header.len() {
                return Err(CoreError::Parse(format!(
                    "row {} has {} fields, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

pub fn checksum_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Run manifest: configuration echo plus per-file checksums, as
/// line-oriented `key=value` records and `file=<name>:<sha256>` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
    pub files: Vec<(String, String)>,
}

impl Manifest {
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn add_file(&mut self, name: &str, contents: &[u8]) {
        self.files.push((name.to_string(), checksum_hex(contents)));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        for (name, sum) in &self.files {
            let _ = writeln!(out, "file={name}:{sum}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::default();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CoreError::Parse(format!("manifest line {}: no '='", i + 1)))?;
            if k == "file" {
                let (name, sum) = v.split_once(':').ok_or_else(|| {
                    CoreError::Parse(format!("manifest line {}: bad file record", i + 1))
                })?;
                m.files.push((name.to_string(), sum.to_string()));
            } else {
                m.entries.push((k.to_string(), v.to_string()));
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn floats_roundtrip_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(-1e6..1e6) * 10f64.powi(rng.gen_range(-30..30));
            assert_eq!(parse_float(&format_float(x)).unwrap(), x);
        }
        for x in [0.0, -0.0, 1.0 / 3.0, std::f64::consts::PI, f64::MIN_POSITIVE] {
            assert_eq!(parse_float(&format_float(x)).unwrap(), x);
        }
    }

    #[test]
    fn table_roundtrip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![format_float(1.5), "x".into()]);
        t.push(vec![format_float(-2.25e-7), "y".into()]);
        let csv = t.to_csv();
        assert!(csv.ends_with('\n'));
        assert!(!csv.contains('\r'));
        assert_eq!(Table::from_csv(&csv).unwrap(), t);
        assert!(Table::from_csv("a,b\n1\n").is_err()); // ragged row
    }

    #[test]
    fn manifest_roundtrip_and_checksums() {
        let mut m = Manifest::default();
        m.set("mode", "chords");
        m.set("seed", "42");
        m.add_file("chords.csv", b"header\n1,2\n");
        let text = m.render();
        assert_eq!(Manifest::parse(&text).unwrap(), m);
        // checksum is stable and content-sensitive
        assert_eq!(checksum_hex(b"abc").len(), 64);
        assert_ne!(checksum_hex(b"abc"), checksum_hex(b"abd"));
        assert_eq!(checksum_hex(b"abc"), checksum_hex(b"abc"));
    }
}
