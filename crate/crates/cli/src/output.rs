//! CSV artifacts, atomic writes and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Reals are written with 17 significant digits in scientific notation,
/// which round-trips every `f64` and ignores the locale.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// An in-memory CSV table.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_reals(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| real(x)).collect());
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(CliError::io)?;
        for row in &self.rows {
            w.write_record(row).map_err(CliError::io)?;
        }
        w.into_inner().map_err(|e| CliError::io(e.into_error()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: Value,
    /// Unix time in seconds when the run started.
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(CliError::io)
}

/// Write every table, then the manifest. If anything fails, files written
/// so far are removed.
pub fn write_run(dir: &Path, tables: &[Table], manifest: &mut RunManifest) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(CliError::io)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        for table in tables {
            let bytes = table.to_bytes()?;
            let path = dir.join(&table.name);
            write_atomic(&path, &bytes)?;
            written.push(path);
            manifest.outputs.push(OutputRecord {
                file: table.name.clone(),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
        let json = serde_json::to_vec_pretty(&*manifest).map_err(CliError::io)?;
        write_atomic(&dir.join(MANIFEST), &json)
    })();
    if result.is_err() {
        for path in written {
            let _ = fs::remove_file(path);
        }
    }
    result
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub manifest: PathBuf,
    pub file: String,
    pub reason: String,
}

fn find_manifests(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.path());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            find_manifests(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == MANIFEST) {
            out.push(path);
        }
    }
    Ok(())
}

/// Check every manifest below `dir` against the files it lists. Returns the
/// number of manifests checked and any mismatches.
pub fn verify_dir(dir: &Path) -> Result<(usize, Vec<Mismatch>), CliError> {
    let mut manifests = Vec::new();
    find_manifests(dir, &mut manifests).map_err(CliError::io)?;
    let mut bad = Vec::new();
    for path in &manifests {
        let text = fs::read(path).map_err(CliError::io)?;
        let manifest: RunManifest = serde_json::from_slice(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for out in &manifest.outputs {
            let reason = match fs::read(base.join(&out.file)) {
                Err(e) => Some(format!("unreadable: {e}")),
                Ok(bytes) if sha256_hex(&bytes) != out.sha256 => Some("checksum mismatch".to_string()),
                Ok(_) => None,
            };
            if let Some(reason) = reason {
                bad.push(Mismatch { manifest: path.clone(), file: out.file.clone(), reason });
            }
        }
    }
    Ok((manifests.len(), bad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0] {
            let s = real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(real(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn table_has_header() {
        let mut t = Table::new("a.csv", &["t", "p"]);
        t.push_reals(&[0.0, 0.5]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "t,p\n0.0000000000000000e0,5.0000000000000000e-1\n");
    }

    #[test]
    fn verify_detects_edit() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("x.csv", &["v"]);
        t.push_reals(&[1.0]);
        let mut m = RunManifest {
            tool: "dynperc".into(),
            version: "0".into(),
            config: Value::Null,
            started_unix: 0.0,
            wall_clock_seconds: 0.0,
            outputs: vec![],
        };
        write_run(dir.path(), &[t], &mut m).unwrap();
        assert_eq!(verify_dir(dir.path()).unwrap(), (1, vec![]));
        fs::write(dir.path().join("x.csv"), "v\n2\n").unwrap();
        let (n, bad) = verify_dir(dir.path()).unwrap();
        assert_eq!(n, 1);
        assert_eq!(bad.len(), 1);
        assert!(!dir.path().join("x.csv.tmp").exists());
    }
}
