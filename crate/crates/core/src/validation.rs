//! The self-validating generation loop.
//!
//! Generate, classify, keep the image only if the validator's prediction is
//! the prompted class (and, optionally, its probability clears a threshold);
//! otherwise discard it and try again with a fresh seed, up to a retry
//! budget. Every attempt is recorded.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageSample;
use crate::pool::{run_pooled, WorkerPair};
use crate::protocol::{ProtocolError, Verdict, WorkerHandle};
use crate::rng::{self, splitmix64};

fn default_budget() -> u32 {
    16
}
fn default_side() -> u32 {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfig {
    #[serde(default = "default_budget")]
    pub retry_budget: u32,
    #[serde(default)]
    pub base_seed: u64,
    /// Minimum probability of the target class for acceptance; 0 disables.
    #[serde(default)]
    pub confidence_threshold: f64,
    #[serde(default = "default_side")]
    pub width: u32,
    #[serde(default = "default_side")]
    pub height: u32,
    /// Keep discarded images so they can be written for auditing.
    #[serde(default)]
    pub audit_dumps: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            retry_budget: default_budget(),
            base_seed: 0,
            confidence_threshold: 0.0,
            width: default_side(),
            height: default_side(),
            audit_dumps: false,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.retry_budget < 1 {
            return Err(Error::Config("retry_budget must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(Error::Config(
                "confidence_threshold must lie in [0,1]".into(),
            ));
        }
        if self.width < 4 || self.height < 4 {
            return Err(Error::Config("image sides must be at least 4".into()));
        }
        Ok(())
    }
}

/// Seed of attempt `attempt` (1-based) for item `item` of class `target`.
pub fn attempt_seed(base_seed: u64, target: usize, item: usize, attempt: u32) -> u64 {
    splitmix64(
        base_seed
            ^ rng::mix(
                rng::purpose::LOOP,
                &[target as u64, item as u64, attempt as u64],
            ),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptRecord {
    pub attempt_index: u32,
    pub seed: u64,
    pub verdict: Verdict,
    pub accepted: bool,
    /// Present only for discarded attempts when audit dumps are enabled.
    #[serde(skip)]
    pub discarded_image: Option<ImageSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedResult {
    pub target: usize,
    pub item_index: usize,
    pub outcome: Outcome,
    pub sample: Option<ImageSample>,
    pub attempts: Vec<AttemptRecord>,
}

impl ValidatedResult {
    pub fn accepted_attempt(&self) -> Option<&AttemptRecord> {
        self.attempts.last().filter(|a| a.accepted)
    }
}

/// A loop aborted by a worker or protocol error, with the attempts that
/// completed before it.
#[derive(Debug, thiserror::Error)]
#[error("class {target} item {item_index}: {error} (after {} recorded attempts)", attempts.len())]
pub struct LoopError {
    pub target: usize,
    pub item_index: usize,
    #[source]
    pub error: ProtocolError,
    pub attempts: Vec<AttemptRecord>,
}

fn accepts(verdict: &Verdict, target: usize, threshold: f64) -> bool {
    verdict.pred() == target && verdict.prob(target) >= threshold
}

pub fn generate_validated(
    generator: &mut WorkerHandle,
    validator: &mut WorkerHandle,
    target: usize,
    cfg: &LoopConfig,
) -> std::result::Result<ValidatedResult, LoopError> {
    generate_validated_item(generator, validator, target, 0, cfg)
}

/// Runs the loop for item `item_index` of class `target`.
pub fn generate_validated_item(
    generator: &mut WorkerHandle,
    validator: &mut WorkerHandle,
    target: usize,
    item_index: usize,
    cfg: &LoopConfig,
) -> std::result::Result<ValidatedResult, LoopError> {
    let mut attempts = Vec::new();
    let budget = cfg.retry_budget.max(1);
    let fail = |error: ProtocolError, attempts: Vec<AttemptRecord>| LoopError {
        target,
        item_index,
        error,
        attempts,
    };
    for attempt in 1..=budget {
        let seed = attempt_seed(cfg.base_seed, target, item_index, attempt);
        let mut sample = match generator.request_generate(target, seed, cfg.width, cfg.height) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, attempts)),
        };
        sample.attempt_index = Some(attempt);
        let verdict = match validator.request_classify(&sample.image) {
            Ok(v) => v,
            Err(e) => return Err(fail(e, attempts)),
        };
        let accepted = accepts(&verdict, target, cfg.confidence_threshold);
        if accepted {
            attempts.push(AttemptRecord {
                attempt_index: attempt,
                seed,
                verdict,
                accepted,
                discarded_image: None,
            });
            return Ok(ValidatedResult {
                target,
                item_index,
                outcome: Outcome::Accepted,
                sample: Some(sample),
                attempts,
            });
        }
        attempts.push(AttemptRecord {
            attempt_index: attempt,
            seed,
            verdict,
            accepted,
            discarded_image: cfg.audit_dumps.then_some(sample),
        });
    }
    Ok(ValidatedResult {
        target,
        item_index,
        outcome: Outcome::BudgetExhausted,
        sample: None,
        attempts,
    })
}

/// Expands `(class, count)` requests into `(class, index)` items ordered by
/// class then index. Repeated classes continue numbering.
pub fn expand_requests(requests: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut totals: BTreeMap<usize, usize> = BTreeMap::new();
    for &(class, count) in requests {
        *totals.entry(class).or_default() += count;
    }
    totals
        .into_iter()
        .flat_map(|(class, n)| (0..n).map(move |i| (class, i)))
        .collect()
}

/// Runs the loop for every requested item over a pool of worker pairs.
/// Results come back ordered by (class, index); one item's failure does not
/// stop the others. Seeds depend only on (class, index, attempt), so results
/// do not depend on pool size or scheduling.
pub fn batch_generate_validated(
    pool: &mut [WorkerPair],
    requests: &[(usize, usize)],
    cfg: &LoopConfig,
) -> Result<Vec<std::result::Result<ValidatedResult, LoopError>>> {
    if requests.iter().any(|&(_, n)| n == 0) {
        return Err(Error::Config("request counts must be at least 1".into()));
    }
    cfg.validate()?;
    let items = expand_requests(requests);
    Ok(run_pooled(pool, &items, |pair, &(class, index)| {
        generate_validated_item(&mut pair.generator, &mut pair.validator, class, index, cfg)
    }))
}
