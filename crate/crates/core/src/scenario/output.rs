//! CSV/JSON writers and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ScenarioConfig;

/// Writes a header and rows of floats with 17 significant digits, LF line
/// endings. `extra` appends preformatted trailing columns per row.
pub fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = (Vec<f64>, Vec<String>)>) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for (nums, extra) in rows {
        let mut first = true;
        for v in nums {
            if !first {
                out.write_all(b",")?;
            }
            first = false;
            write!(out, "{v:.16e}")?;
        }
        for s in extra {
            if !first {
                out.write_all(b",")?;
            }
            first = false;
            out.write_all(s.as_bytes())?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub version: String,
    pub config: ScenarioConfig,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    /// File name → SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timescales: Option<serde_json::Value>,
}

impl RunManifest {
    /// Checksums every file in `names` under `dir`, then writes
    /// `manifest.json` via a temporary file and a rename.
    pub fn write(mut self, dir: &Path, names: &[String]) -> io::Result<Self> {
        for name in names {
            self.files.insert(name.clone(), sha256_file(&dir.join(name))?);
        }
        let tmp = dir.join(".manifest.json.tmp");
        write_json(&tmp, &self)?;
        fs::rename(&tmp, dir.join("manifest.json"))?;
        Ok(self)
    }

    /// Recomputes the checksums and reports the first mismatching file.
    pub fn verify(&self, dir: &Path) -> io::Result<Result<(), String>> {
        for (name, sum) in &self.files {
            let path = dir.join(name);
            if !path.exists() {
                return Ok(Err(format!("{name} is missing")));
            }
            if &sha256_file(&path)? != sum {
                return Ok(Err(format!("{name} does not match its checksum")));
            }
        }
        Ok(Ok(()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let rows = vec![(vec![0.0, 1.5], vec!["ok".to_string()]), (vec![f64::NAN, -0.25], vec!["x".into()])];
        write_csv(&p, &["a", "b", "status"], rows.into_iter()).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "a,b,status\n0.0000000000000000e0,1.5000000000000000e0,ok\nNaN,-2.5000000000000000e-1,x\n"
        );
    }

    #[test]
    fn sha256_known_value() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
