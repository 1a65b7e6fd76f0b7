use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use super::{EvalReport, MacroMetrics};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub run: PathBuf,
    pub version_tag: Option<String>,
    pub checkpoint_step: Option<u64>,
    /// `None` when the report could not be read.
    pub macros: Option<MacroMetrics>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

const HEADER: [&str; 7] = [
    "run",
    "version_tag",
    "checkpoint_step",
    "macro_precision",
    "macro_recall",
    "macro_f1",
    "status",
];

impl ComparisonTable {
    fn cells(&self) -> Vec<[String; 7]> {
        self.rows
            .iter()
            .map(|r| {
                let m = |f: fn(&MacroMetrics) -> f64| {
                    r.macros
                        .as_ref()
                        .map(|x| format!("{:.6}", f(x)))
                        .unwrap_or_default()
                };
                [
                    r.run.display().to_string(),
                    r.version_tag.clone().unwrap_or_default(),
                    r.checkpoint_step.map(|s| s.to_string()).unwrap_or_default(),
                    m(|x| x.precision),
                    m(|x| x.recall),
                    m(|x| x.f1),
                    r.status.clone(),
                ]
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory csv");
        for row in self.cells() {
            w.write_record(&row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    /// Space-aligned columns for terminals.
    pub fn to_text(&self) -> String {
        let cells = self.cells();
        let mut widths: Vec<usize> = HEADER.iter().map(|h| h.len()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |row: &[String]| {
            let padded: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let header: Vec<String> = HEADER.iter().map(|s| s.to_string()).collect();
        let mut out = line(&header);
        for row in &cells {
            out.push_str(&line(row));
        }
        out
    }
}

/// Compares the evaluation reports stored in `run_dirs`. Rows are ordered
/// by version tag (numeric runs compared as numbers, so V9 < V10), then by
/// checkpoint step; unreadable runs come last in input order.
pub fn compare_runs(run_dirs: &[PathBuf]) -> Result<ComparisonTable> {
    if run_dirs.is_empty() {
        return Err(Error::Evaluation("no runs".into()));
    }
    let mut rows: Vec<ComparisonRow> = run_dirs.iter().map(|d| read_row(d)).collect();
    rows.sort_by(|a, b| {
        a.macros
            .is_none()
            .cmp(&b.macros.is_none())
            .then_with(|| {
                natural_cmp(
                    a.version_tag.as_deref().unwrap_or(""),
                    b.version_tag.as_deref().unwrap_or(""),
                )
            })
            .then_with(|| a.checkpoint_step.cmp(&b.checkpoint_step))
    });
    Ok(ComparisonTable { rows })
}

fn read_row(dir: &Path) -> ComparisonRow {
    let unreadable = |why: String| ComparisonRow {
        run: dir.to_path_buf(),
        version_tag: None,
        checkpoint_step: None,
        macros: None,
        status: format!("unreadable: {why}"),
    };
    let path = dir.join("report.json");
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return unreadable(format!("{}: {e}", path.display())),
    };
    let (manifest, macros) = match EvalReport::stored_macros(&text) {
        Ok(x) => x,
        Err(e) => return unreadable(e.to_string()),
    };
    let id = manifest.generator_identity;
    ComparisonRow {
        run: dir.to_path_buf(),
        version_tag: id.as_ref().map(|i| i.version_tag.clone()),
        checkpoint_step: id.and_then(|i| i.checkpoint_step),
        macros: Some(macros),
        status: "ok".into(),
    }
}

/// Orders strings chunk-wise, comparing digit runs by numeric value.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a, b);
    loop {
        match (a.is_empty(), b.is_empty()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (ca, ra) = split_chunk(a);
        let (cb, rb) = split_chunk(b);
        let a_num = ca.as_bytes()[0].is_ascii_digit();
        let b_num = cb.as_bytes()[0].is_ascii_digit();
        let ord = if a_num && b_num {
            let ta = ca.trim_start_matches('0');
            let tb = cb.trim_start_matches('0');
            ta.len()
                .cmp(&tb.len())
                .then_with(|| ta.cmp(tb))
                .then_with(|| ca.len().cmp(&cb.len()))
        } else {
            ca.cmp(cb)
        };
        if ord != Ordering::Equal {
            return ord;
        }
        a = ra;
        b = rb;
    }
}

fn split_chunk(s: &str) -> (&str, &str) {
    let digit = s.as_bytes()[0].is_ascii_digit();
    let end = s
        .bytes()
        .position(|c| c.is_ascii_digit() != digit)
        .unwrap_or(s.len());
    s.split_at(end)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_order() {
        let mut tags = vec!["V10", "V9", "V1", "V2", "baseline", "V09"];
        tags.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(tags, vec!["V1", "V2", "V9", "V09", "V10", "baseline"]);
    }

    #[test]
    fn empty_is_an_error() {
        let e = compare_runs(&[]).unwrap_err();
        assert!(e.to_string().contains("no runs"));
    }

    #[test]
    fn missing_report_is_marked_unreadable() {
        let dir = tempfile::tempdir().unwrap();
        let t = compare_runs(&[dir.path().to_path_buf()]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows[0].status.starts_with("unreadable"));
        assert!(t.to_csv().contains("unreadable"));
    }
}
