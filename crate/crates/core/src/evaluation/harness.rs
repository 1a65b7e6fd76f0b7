use serde::{Deserialize, Serialize};

use super::{CellError, ConfusionMatrix, EvalReport};
use crate::catalog::ClassCatalog;
use crate::error::{Error, Result};
use crate::image::ImageSample;
use crate::manifest::RunManifest;
use crate::pool::{run_pooled, WorkerPair};
use crate::protocol::Verdict;
use crate::rng::{self, splitmix64};

fn default_n() -> usize {
    10
}
fn default_side() -> u32 {
    64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "default_n")]
    pub n_per_class: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_side")]
    pub width: u32,
    #[serde(default = "default_side")]
    pub height: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_per_class: default_n(),
            base_seed: 0,
            width: default_side(),
            height: default_side(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class < 1 {
            return Err(Error::Config("n_per_class must be at least 1".into()));
        }
        if self.width < 4 || self.height < 4 {
            return Err(Error::Config("image sides must be at least 4".into()));
        }
        Ok(())
    }
}

/// Seed of evaluation item `index` of class `class`.
pub fn eval_seed(base_seed: u64, class: usize, index: usize) -> u64 {
    splitmix64(base_seed ^ rng::mix(rng::purpose::EVAL, &[class as u64, index as u64]))
}

/// One generated-and-classified evaluation item. `sample` and `verdict` are
/// absent when a worker failed on this cell.
#[derive(Debug, Clone)]
pub struct EvalCell {
    pub class_id: usize,
    pub item_index: usize,
    pub seed: u64,
    pub sample: Option<ImageSample>,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct EvaluationRun {
    pub report: EvalReport,
    /// Ordered by (class, index).
    pub cells: Vec<EvalCell>,
}

/// Generates `n_per_class` first-attempt images per class and classifies
/// each one. Nothing is regenerated; failed cells are recorded and leave
/// their confusion row short.
pub fn evaluate_first_attempt(
    pool: &mut [WorkerPair],
    catalog: &ClassCatalog,
    cfg: &EvalConfig,
    manifest: &RunManifest,
) -> Result<EvaluationRun> {
    cfg.validate()?;
    let k = catalog.k();
    let items: Vec<(usize, usize)> = (0..k)
        .flat_map(|c| (0..cfg.n_per_class).map(move |i| (c, i)))
        .collect();
    let cells = run_pooled(pool, &items, |pair, &(class_id, item_index)| {
        let seed = eval_seed(cfg.base_seed, class_id, item_index);
        let mut cell = EvalCell {
            class_id,
            item_index,
            seed,
            sample: None,
            verdict: None,
            error: None,
        };
        let mut sample = match pair
            .generator
            .request_generate(class_id, seed, cfg.width, cfg.height)
        {
            Ok(s) => s,
            Err(e) => {
                cell.error = Some(format!("generate: {e}"));
                return cell;
            }
        };
        sample.attempt_index = Some(1);
        match pair.validator.request_classify(&sample.image) {
            Ok(v) => cell.verdict = Some(v),
            Err(e) => cell.error = Some(format!("classify: {e}")),
        }
        cell.sample = Some(sample);
        cell
    });

    let mut confusion = ConfusionMatrix::zeros(k);
    let mut errors = Vec::new();
    for cell in &cells {
        match (&cell.verdict, &cell.error) {
            (Some(v), None) => confusion.add(cell.class_id, v.pred())?,
            (_, Some(msg)) => errors.push(CellError {
                class_id: cell.class_id,
                item_index: cell.item_index,
                message: msg.clone(),
            }),
            (None, None) => unreachable!("cell has neither verdict nor error"),
        }
    }
    let report = EvalReport::new(
        confusion,
        catalog.names(),
        cfg.n_per_class,
        manifest.reproducible(),
        errors,
    );
    Ok(EvaluationRun { report, cells })
}
