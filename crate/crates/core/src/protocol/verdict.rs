use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// Allowed deviation of a probability vector's sum from 1.
pub const PROB_SUM_TOLERANCE: f64 = 1e-3;

/// A validated classifier output: `probs` has length k, entries in [0,1]
/// summing to 1 within [`PROB_SUM_TOLERANCE`], and `pred` is its argmax
/// with ties going to the lowest index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    probs: Vec<f64>,
    pred: usize,
}

impl Verdict {
    pub fn from_probs(probs: Vec<f64>, k: usize) -> Result<Self, ProtocolError> {
        if probs.len() != k {
            return Err(ProtocolError::BadProbabilities(format!(
                "expected {k} probabilities, got {}",
                probs.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && (0.0..=1.0).contains(*p)))
        {
            return Err(ProtocolError::BadProbabilities(format!(
                "probs[{i}] = {p} outside [0,1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(ProtocolError::BadProbabilities(format!(
                "sum {sum} is not 1"
            )));
        }
        let pred = argmax(&probs);
        Ok(Self { probs, pred })
    }

    /// Validates a worker-supplied verdict. The returned flag is true when
    /// the worker's claimed prediction disagreed with the argmax and was
    /// overridden.
    pub fn from_worker(
        probs: Vec<f64>,
        claimed: usize,
        k: usize,
    ) -> Result<(Self, bool), ProtocolError> {
        let v = Self::from_probs(probs, k)?;
        let overridden = v.pred != claimed;
        Ok((v, overridden))
    }

    pub fn one_hot(k: usize, class: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[class] = 1.0;
        Self { probs, pred: class }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pred(&self) -> usize {
        self.pred
    }

    pub fn prob(&self, class: usize) -> f64 {
        self.probs.get(class).copied().unwrap_or(0.0)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
