use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    #[serde(rename = "path")]
    pub relative_path: String,
    #[serde(rename = "label_id")]
    pub class_id: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<DatasetEntry>,
    pub counts_per_class: Vec<usize>,
}

impl DatasetManifest {
    /// Builds a manifest from entries, checking labels and path uniqueness.
    /// File existence is not checked here; see [`ingest_manifest`].
    pub fn from_entries(
        root: impl Into<PathBuf>,
        entries: Vec<DatasetEntry>,
        k: usize,
    ) -> Result<Self> {
        let mut counts = vec![0usize; k];
        let mut seen = HashSet::new();
        for e in &entries {
            if e.class_id >= k {
                return Err(Error::Dataset(format!(
                    "unknown class_id {} for {} (k={k})",
                    e.class_id, e.relative_path
                )));
            }
            if !seen.insert(e.relative_path.as_str()) {
                return Err(Error::Dataset(format!(
                    "duplicate path {}",
                    e.relative_path
                )));
            }
            counts[e.class_id] += 1;
        }
        Ok(Self {
            root: root.into(),
            entries,
            counts_per_class: counts,
        })
    }

    pub fn k(&self) -> usize {
        self.counts_per_class.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn path_of(&self, entry: &DatasetEntry) -> PathBuf {
        self.root.join(&entry.relative_path)
    }

    /// Writes the `path,label_id` CSV.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        for e in &self.entries {
            w.serialize(e)?;
        }
        if self.entries.is_empty() {
            w.write_record(["path", "label_id"])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Reads a `path,label_id` CSV whose paths are relative to `root`.
pub fn ingest_manifest(
    csv_path: impl AsRef<Path>,
    root: impl AsRef<Path>,
    k: usize,
) -> Result<DatasetManifest> {
    let csv_path = csv_path.as_ref();
    let root = root.as_ref();
    if !csv_path.exists() {
        return Err(Error::MissingFile(csv_path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(csv_path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["path", "label_id"] {
        return Err(Error::Dataset(format!(
            "expected header `path,label_id`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut entries = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = line + 2;
        if record.len() != 2 {
            return Err(Error::Dataset(format!(
                "malformed row {row}: expected 2 fields"
            )));
        }
        let rel = record[0].trim();
        if rel.is_empty() {
            return Err(Error::Dataset(format!("malformed row {row}: empty path")));
        }
        let class_id: usize = record[1].trim().parse().map_err(|_| {
            Error::Dataset(format!(
                "malformed row {row}: bad label_id {:?}",
                &record[1]
            ))
        })?;
        entries.push(DatasetEntry {
            relative_path: rel.to_string(),
            class_id,
        });
    }
    if entries.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    let manifest = DatasetManifest::from_entries(root, entries, k)?;
    for e in &manifest.entries {
        let p = manifest.path_of(e);
        if !p.is_file() {
            return Err(Error::MissingFile(p));
        }
    }
    Ok(manifest)
}
