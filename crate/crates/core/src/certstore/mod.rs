//! Certificate files, the bundled case registry, checksums and batch
//! verification.

mod batch;
mod format;
mod registry;

pub use batch::{verify_dir, verify_files, BatchEntry, BatchReport, BatchTotals};
pub use format::{
    format_fraction, load_certificate, parse_fraction, save_certificate, CertificateFile, JsonInt,
    SCHEMA_VERSION,
};
pub use registry::{label_order, lookup, registry, CaseInfo, Nature};

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("inconsistent polynomials: {0}")]
    InconsistentPolynomials(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("unknown case label {0:?}")]
    UnknownCase(String),
    #[error("no certificate files in {0}")]
    EmptyDirectory(String),
}

/// Directory holding the bundled certificate corpus.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join("certs")
}

/// Certificate files (`*.json`) in a directory, sorted by file name.
pub fn certificate_paths(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, StoreError> {
    let dir = dir.as_ref();
    let entries =
        fs::read_dir(dir).map_err(|e| StoreError::Io(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `sha256sum`-style manifest of every certificate file in `dir`.
pub fn checksum_manifest(dir: impl AsRef<Path>) -> Result<String, StoreError> {
    let mut out = String::new();
    for path in certificate_paths(&dir)? {
        let bytes =
            fs::read(&path).map_err(|e| StoreError::Io(format!("{}: {e}", path.display())))?;
        let name = path.file_name().expect("file").to_string_lossy();
        out.push_str(&format!("{}  {name}\n", sha256_hex(&bytes)));
    }
    Ok(out)
}

/// Compares the files in `dir` with its `SHA256SUMS` manifest and returns
/// the names that are missing, extra or changed.
pub fn checksum_mismatches(dir: impl AsRef<Path>) -> Result<Vec<String>, StoreError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("SHA256SUMS");
    let pinned = fs::read_to_string(&manifest_path)
        .map_err(|e| StoreError::Io(format!("{}: {e}", manifest_path.display())))?;
    let actual = checksum_manifest(dir)?;
    let parse = |s: &str| -> std::collections::BTreeMap<String, String> {
        s.lines()
            .filter_map(|l| l.split_once("  "))
            .map(|(h, n)| (n.trim().to_string(), h.trim().to_string()))
            .collect()
    };
    let (pinned, actual) = (parse(&pinned), parse(&actual));
    let mut bad: Vec<String> = pinned
        .iter()
        .filter(|(n, h)| actual.get(*n) != Some(*h))
        .map(|(n, _)| n.clone())
        .collect();
    bad.extend(actual.keys().filter(|n| !pinned.contains_key(*n)).cloned());
    bad.sort();
    Ok(bad)
}
