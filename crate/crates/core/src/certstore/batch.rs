use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{certificate_paths, label_order, load_certificate, StoreError};
use crate::group::build_group_data;
use crate::verify::{verify, VerificationReport};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchEntry {
    pub file: String,
    pub label: Option<String>,
    pub report: Option<VerificationReport>,
    pub error: Option<String>,
}

impl BatchEntry {
    pub fn passed(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.overall)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchTotals {
    pub pass: usize,
    pub fail: usize,
    pub error: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchReport {
    pub per_case: Vec<BatchEntry>,
    pub totals: BatchTotals,
    #[serde(rename = "wall_clock_ms", with = "wall_ms")]
    pub wall_clock: Duration,
}

mod wall_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1000.0)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)? / 1000.0))
    }
}

impl BatchReport {
    pub fn all_passed(&self) -> bool {
        self.totals.fail == 0 && self.totals.error == 0
    }
}

fn verify_one(path: &Path) -> BatchEntry {
    let file = path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    let outcome = load_certificate(path)
        .map_err(|e| e.to_string())
        .and_then(|cert| {
            let gd = build_group_data(&cert.case).map_err(|e| e.to_string())?;
            let report = verify(&gd, &cert).map_err(|e| e.to_string())?;
            Ok((cert.label, report))
        });
    match outcome {
        Ok((label, report)) => BatchEntry {
            file,
            label: Some(label),
            report: Some(report),
            error: None,
        },
        Err(error) => BatchEntry {
            file,
            label: None,
            report: None,
            error: Some(error),
        },
    }
}

/// Verifies the given files on `jobs` worker threads. Entries are ordered by
/// label (files that failed to load sort last, by file name).
pub fn verify_files(paths: &[PathBuf], jobs: usize) -> Result<BatchReport, StoreError> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| StoreError::Io(e.to_string()))?;
    let mut per_case: Vec<BatchEntry> =
        pool.install(|| paths.par_iter().map(|p| verify_one(p)).collect());
    per_case.sort_by(|a, b| match (&a.label, &b.label) {
        (Some(x), Some(y)) => label_order(x, y).then_with(|| a.file.cmp(&b.file)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.file.cmp(&b.file),
    });
    let mut totals = BatchTotals::default();
    for e in &per_case {
        match (&e.report, &e.error) {
            (Some(r), _) if r.overall => totals.pass += 1,
            (Some(_), _) => totals.fail += 1,
            _ => totals.error += 1,
        }
    }
    Ok(BatchReport {
        per_case,
        totals,
        wall_clock: start.elapsed(),
    })
}

pub fn verify_dir(dir: impl AsRef<Path>, jobs: usize) -> Result<BatchReport, StoreError> {
    let paths = certificate_paths(&dir)?;
    if paths.is_empty() {
        return Err(StoreError::EmptyDirectory(
            dir.as_ref().display().to_string(),
        ));
    }
    verify_files(&paths, jobs)
}
