//! On-disk record of one run.
//!
//! Layout: `manifest.json`, `config.json`, `report.json`, `confusion.csv`,
//! `attempts.jsonl`, `images/`, `audit/`, `charts/`. The manifest is the
//! first file written and its `completed` flag is set last, so a run that
//! died part way is recognizable.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::encode_image;
use crate::error::{Error, Result};
use crate::evaluation::{render_charts, EvalReport};
use crate::image::ImageBuffer;
use crate::manifest::RunManifest;
use crate::protocol::Verdict;

/// One line of `attempts.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptLine<'a> {
    pub class_id: usize,
    pub item_index: usize,
    pub attempt_index: u32,
    pub seed: u64,
    pub pred: usize,
    pub probs: &'a [f64],
    pub accepted: bool,
}

impl<'a> AttemptLine<'a> {
    pub fn new(
        class_id: usize,
        item_index: usize,
        attempt_index: u32,
        seed: u64,
        verdict: &'a Verdict,
        accepted: bool,
    ) -> Self {
        Self {
            class_id,
            item_index,
            attempt_index,
            seed,
            pred: verdict.pred(),
            probs: verdict.probs(),
            accepted,
        }
    }
}

#[derive(Debug)]
pub struct RunDirectory {
    path: PathBuf,
    manifest: RunManifest,
}

/// Directory-name form of a class name: lowercase ASCII alphanumerics with
/// everything else turned into `_`.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

impl RunDirectory {
    /// Creates the directory (which must be absent or empty) and writes the
    /// manifest followed by the config snapshot.
    pub fn create(path: impl Into<PathBuf>, manifest: RunManifest) -> Result<Self> {
        let path = path.into();
        if path.exists() {
            let mut entries = fs::read_dir(&path).map_err(|e| Error::io(&path, e))?;
            if entries.next().is_some() {
                return Err(Error::Config(format!(
                    "run directory {} is not empty",
                    path.display()
                )));
            }
        }
        fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        let dir = Self { path, manifest };
        dir.write_manifest()?;
        write_file(
            &dir.path.join("config.json"),
            format!("{}\n", dir.manifest.config_snapshot).as_bytes(),
        )?;
        Ok(dir)
    }

    /// Opens an existing run by reading its manifest.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mpath = path.join("manifest.json");
        if !mpath.is_file() {
            return Err(Error::MissingFile(mpath));
        }
        let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let manifest = serde_json::from_str(&text)?;
        Ok(Self { path, manifest })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    /// Applies `f` to the manifest and rewrites it.
    pub fn update_manifest(&mut self, f: impl FnOnce(&mut RunManifest)) -> Result<()> {
        f(&mut self.manifest);
        self.write_manifest()
    }

    fn write_manifest(&self) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        // Write then rename so a reader never sees a torn manifest.
        let tmp = self.path.join("manifest.json.tmp");
        write_file(&tmp, text.as_bytes())?;
        let dst = self.path.join("manifest.json");
        fs::rename(&tmp, &dst).map_err(|e| Error::io(&dst, e))
    }

    pub fn read_report(&self) -> Result<EvalReport> {
        let p = self.path.join("report.json");
        if !p.is_file() {
            return Err(Error::MissingFile(p));
        }
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        EvalReport::from_json(&text)
    }

    pub fn write_report(&self, report: &EvalReport, transpose: bool) -> Result<()> {
        write_file(
            &self.path.join("report.json"),
            report.to_canonical_json().as_bytes(),
        )?;
        self.write_derived(report, transpose)
    }

    /// Rewrites `confusion.csv` and the charts from a report.
    pub fn write_derived(&self, report: &EvalReport, transpose: bool) -> Result<()> {
        let confusion = if transpose {
            report.confusion.transposed()
        } else {
            report.confusion.clone()
        };
        write_file(
            &self.path.join("confusion.csv"),
            confusion.to_csv(&report.class_names).as_bytes(),
        )?;
        let charts = render_charts(report, transpose);
        write_file(
            &self.path.join("charts/f1_bars.svg"),
            charts.f1_bars.as_bytes(),
        )?;
        write_file(
            &self.path.join("charts/confusion.svg"),
            charts.confusion_heatmap.as_bytes(),
        )
    }

    pub fn write_attempts<'a>(
        &self,
        lines: impl IntoIterator<Item = AttemptLine<'a>>,
    ) -> Result<()> {
        let mut buf = Vec::new();
        for line in lines {
            serde_json::to_writer(&mut buf, &line)?;
            buf.push(b'\n');
        }
        write_file(&self.path.join("attempts.jsonl"), &buf)
    }

    pub fn image_path(
        &self,
        class_id: usize,
        class_name: &str,
        index: usize,
        attempt: u32,
    ) -> PathBuf {
        self.path
            .join("images")
            .join(format!("{class_id}_{}", slug(class_name)))
            .join(format!("{index}_{attempt}.png"))
    }

    pub fn write_image(
        &self,
        class_id: usize,
        class_name: &str,
        index: usize,
        attempt: u32,
        img: &ImageBuffer,
    ) -> Result<PathBuf> {
        let p = self.image_path(class_id, class_name, index, attempt);
        write_file(&p, &encode_image(img))?;
        Ok(p)
    }

    /// Writes a discarded attempt under `audit/`, mirroring the image layout.
    pub fn write_audit(
        &self,
        class_id: usize,
        class_name: &str,
        index: usize,
        attempt: u32,
        img: &ImageBuffer,
    ) -> Result<PathBuf> {
        let p = self
            .path
            .join("audit")
            .join(format!("{class_id}_{}", slug(class_name)))
            .join(format!("{index}_{attempt}.png"));
        write_file(&p, &encode_image(img))?;
        Ok(p)
    }

    /// Marks the run complete. Must be the last write.
    pub fn finalize(&mut self) -> Result<()> {
        self.update_manifest(|m| m.completed = true)
    }
}
