//! Dataset manifest and external-score CSV loading.
//!
//! A manifest row ties a reference/reconstruction pair to its mean opinion
//! score and a subset tag:
//!
//! ```text
//! pair_id,reference,reconstructed,mos,subset
//! office_03,refs/office.png,recon/office_03.png,4.25,static
//! ```
//!
//! Relative paths are resolved against the manifest's own directory so a
//! dataset directory can be moved around as a unit.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ManifestEntry {
    pub pair_id: String,
    pub reference: PathBuf,
    pub reconstructed: PathBuf,
    pub mos: f64,
    pub subset: String,
}

#[derive(Clone, Debug, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Subset tags in first-appearance order, without duplicates.
    pub fn subsets(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .filter(|e| seen.insert(e.subset.as_str()))
            .map(|e| e.subset.as_str())
            .collect()
    }
}

const EXPECTED_HEADER: [&str; 5] = ["pair_id", "reference", "reconstructed", "mos", "subset"];

/// Loads and fully validates a manifest: every referenced image file must
/// already exist. Use this when a missing file should stop the run.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let manifest = load_manifest_deferred(path)?;
    for entry in &manifest.entries {
        for p in [&entry.reference, &entry.reconstructed] {
            if !p.is_file() {
                return Err(Error::MissingFile(p.clone()));
            }
        }
    }
    Ok(manifest)
}

/// Parses a manifest without checking that the image files exist. The
/// evaluation driver uses this so unreadable pairs can be skipped and
/// reported instead of aborting the whole run.
pub fn load_manifest_deferred(path: &Path) -> Result<DatasetManifest> {
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(e, path))?;

    {
        let headers = reader.headers().map_err(|e| csv_error(e, path))?;
        let got: Vec<&str> = headers.iter().collect();
        if got != EXPECTED_HEADER {
            return Err(Error::ParseError {
                line: 1,
                msg: format!(
                    "expected header {}, got {}",
                    EXPECTED_HEADER.join(","),
                    got.join(",")
                ),
            });
        }
    }

    let mut entries = Vec::new();
    let mut seen_ids = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, path))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 5 {
            return Err(Error::ParseError {
                line,
                msg: format!("expected 5 fields, got {}", record.len()),
            });
        }
        let pair_id = record[0].to_string();
        if pair_id.is_empty() {
            return Err(Error::ParseError {
                line,
                msg: "empty pair_id".into(),
            });
        }
        if !seen_ids.insert(pair_id.clone()) {
            return Err(Error::ParseError {
                line,
                msg: format!("duplicate pair_id {pair_id}"),
            });
        }
        let mos: f64 = record[3].parse().map_err(|_| Error::ParseError {
            line,
            msg: format!("mos is not a number: {}", &record[3]),
        })?;
        if !(1.0..=5.0).contains(&mos) {
            return Err(Error::MosOutOfRange { line, value: mos });
        }
        entries.push(ManifestEntry {
            pair_id,
            reference: resolve(base, &record[1]),
            reconstructed: resolve(base, &record[2]),
            mos,
            subset: record[4].to_string(),
        });
    }
    Ok(DatasetManifest { entries })
}

/// One row of externally computed scores to merge into a report.
#[derive(Clone, Debug)]
pub struct ExternalScore {
    pub pair_id: String,
    pub metric: String,
    pub score: f64,
}

/// Loads a `pair_id,metric,score` CSV of scores computed by other tools.
pub fn load_external_scores(path: &Path) -> Result<Vec<ExternalScore>> {
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(e, path))?;
    {
        let headers = reader.headers().map_err(|e| csv_error(e, path))?;
        let got: Vec<&str> = headers.iter().collect();
        if got != ["pair_id", "metric", "score"] {
            return Err(Error::ParseError {
                line: 1,
                msg: format!("expected header pair_id,metric,score, got {}", got.join(",")),
            });
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, path))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::ParseError {
                line,
                msg: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let score: f64 = record[2].parse().map_err(|_| Error::ParseError {
            line,
            msg: format!("score is not a number: {}", &record[2]),
        })?;
        rows.push(ExternalScore {
            pair_id: record[0].to_string(),
            metric: record[1].to_string(),
            score,
        });
    }
    Ok(rows)
}

fn resolve(base: &Path, raw: &str) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn csv_error(e: csv::Error, path: &Path) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                Error::Io {
                    path: path.to_path_buf(),
                    source: io,
                }
            } else {
                unreachable!()
            }
        }
        _ => Error::ParseError {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        },
    }
}
