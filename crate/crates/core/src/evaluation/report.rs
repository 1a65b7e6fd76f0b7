use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use super::{metrics_from_confusion, ClassMetrics, ConfusionMatrix, MacroMetrics};
use crate::error::{Error, Result};
use crate::manifest::ReproducibleManifest;

pub const REPORT_FORMAT: &str = "valigen-eval-report/1";

/// A cell the evaluation could not fill because a worker failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellError {
    pub class_id: usize,
    pub item_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub class_names: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_metrics: MacroMetrics,
    pub n_per_class: usize,
    pub manifest: ReproducibleManifest,
    pub errors: Vec<CellError>,
}

impl EvalReport {
    pub fn new(
        confusion: ConfusionMatrix,
        class_names: Vec<String>,
        n_per_class: usize,
        manifest: ReproducibleManifest,
        errors: Vec<CellError>,
    ) -> Self {
        let (per_class, macro_metrics) = metrics_from_confusion(&confusion);
        Self {
            confusion,
            class_names,
            per_class,
            macro_metrics,
            n_per_class,
            manifest,
            errors,
        }
    }

    /// True when every confusion row holds exactly `n_per_class` verdicts.
    pub fn complete(&self) -> bool {
        self.errors.is_empty()
            && (0..self.confusion.k()).all(|c| self.confusion.row_sum(c) == self.n_per_class as u64)
    }

    pub fn macro_precision(&self) -> f64 {
        self.macro_metrics.precision
    }

    pub fn macro_recall(&self) -> f64 {
        self.macro_metrics.recall
    }

    pub fn macro_f1(&self) -> f64 {
        self.macro_metrics.f1
    }

    /// Canonical JSON: fixed key order, metric floats with exactly six
    /// decimals. Identical reports give identical bytes.
    pub fn to_canonical_json(&self) -> String {
        let file = ReportOut {
            format: REPORT_FORMAT,
            manifest: &self.manifest,
            n_per_class: self.n_per_class,
            complete: self.complete(),
            class_names: &self.class_names,
            confusion: self.confusion.counts(),
            per_class: self
                .per_class
                .iter()
                .map(|c| ClassOut {
                    class_id: c.class_id,
                    name: self
                        .class_names
                        .get(c.class_id)
                        .map(String::as_str)
                        .unwrap_or(""),
                    precision: c.precision,
                    recall: c.recall,
                    f1: c.f1,
                    support: c.support,
                })
                .collect(),
            macro_precision: self.macro_metrics.precision,
            macro_recall: self.macro_metrics.recall,
            macro_f1: self.macro_metrics.f1,
            errors: &self.errors,
        };
        let mut text = serde_json::to_string_pretty(&file).expect("report serializes");
        text.push('\n');
        text
    }

    /// Parses a report written by [`Self::to_canonical_json`]. Metrics are
    /// recomputed from the confusion matrix.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ReportIn = serde_json::from_str(text)?;
        if file.format != REPORT_FORMAT {
            return Err(Error::Evaluation(format!(
                "unknown report format {:?}",
                file.format
            )));
        }
        let confusion = ConfusionMatrix::from_counts(file.confusion)?;
        if file.class_names.len() != confusion.k() {
            return Err(Error::Evaluation(
                "class_names length does not match confusion size".into(),
            ));
        }
        Ok(Self::new(
            confusion,
            file.class_names,
            file.n_per_class,
            file.manifest,
            file.errors,
        ))
    }

    /// Parses only the stored macro values, without recomputation. Used to
    /// compare runs whose reports were produced elsewhere.
    pub fn stored_macros(text: &str) -> Result<(ReproducibleManifest, MacroMetrics)> {
        let file: ReportIn = serde_json::from_str(text)?;
        Ok((
            file.manifest,
            MacroMetrics {
                precision: file.macro_precision,
                recall: file.macro_recall,
                f1: file.macro_f1,
            },
        ))
    }
}

pub(crate) fn fixed6<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    let raw = RawValue::from_string(format!("{v:.6}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

#[derive(Serialize)]
struct ReportOut<'a> {
    format: &'static str,
    manifest: &'a ReproducibleManifest,
    n_per_class: usize,
    complete: bool,
    class_names: &'a [String],
    confusion: &'a [Vec<u64>],
    per_class: Vec<ClassOut<'a>>,
    #[serde(serialize_with = "fixed6")]
    macro_precision: f64,
    #[serde(serialize_with = "fixed6")]
    macro_recall: f64,
    #[serde(serialize_with = "fixed6")]
    macro_f1: f64,
    errors: &'a [CellError],
}

#[derive(Serialize)]
struct ClassOut<'a> {
    class_id: usize,
    name: &'a str,
    #[serde(serialize_with = "fixed6")]
    precision: f64,
    #[serde(serialize_with = "fixed6")]
    recall: f64,
    #[serde(serialize_with = "fixed6")]
    f1: f64,
    support: u64,
}

#[derive(Deserialize)]
struct ReportIn {
    format: String,
    manifest: ReproducibleManifest,
    n_per_class: usize,
    class_names: Vec<String>,
    confusion: Vec<Vec<u64>>,
    macro_precision: f64,
    macro_recall: f64,
    macro_f1: f64,
    #[serde(default)]
    errors: Vec<CellError>,
}
