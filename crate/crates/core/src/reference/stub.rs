use std::path::Path;

use super::texture::read_tag;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::protocol::Verdict;
use crate::rng::{self, SplitMix64};

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Row-stochastic k x k matrix: row = true class, entry = probability of
/// predicting each class.
#[derive(Debug, Clone, PartialEq)]
pub struct StubPolicy {
    rows: Vec<Vec<f64>>,
}

impl StubPolicy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k < 2 {
            return Err(Error::Config("stub matrix needs at least 2 rows".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Config(format!(
                    "stub row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Config(format!(
                    "stub row {i} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::Config(format!("stub row {i} sums to {sum}, not 1")));
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(k: usize) -> Self {
        Self::with_diagonal(k, 1.0)
    }

    pub fn uniform(k: usize) -> Self {
        Self::new(vec![vec![1.0 / k as f64; k]; k]).expect("uniform rows sum to 1")
    }

    /// Diagonal `p`, remaining mass spread evenly over the other classes.
    pub fn with_diagonal(k: usize, p: f64) -> Self {
        let off = (1.0 - p) / (k - 1) as f64;
        let rows = (0..k)
            .map(|i| (0..k).map(|j| if i == j { p } else { off }).collect())
            .collect();
        Self::new(rows).expect("diagonal policy is row-stochastic")
    }

    /// Parses k lines of k comma-separated probabilities.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|line| {
                line.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Config(format!("bad stub matrix entry {v:?}")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.rows[class]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn sample(&self, class: usize, u: f64) -> usize {
        let row = &self.rows[class];
        let mut acc = 0.0;
        for (j, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // Rounding left u above the accumulated total: last class with mass.
        row.iter().rposition(|&p| p > 0.0).unwrap_or(class)
    }
}

/// Predicts by sampling row `Q[tag]` with a stream keyed by
/// `(seed, request_counter)`; probabilities are one-hot at the sample.
pub fn stub_classify(
    img: &ImageBuffer,
    policy: &StubPolicy,
    seed: u64,
    request_counter: u64,
) -> Result<Verdict> {
    let truth = read_tag(img, policy.k())
        .ok_or_else(|| Error::Image("stub requires tagged images".into()))?;
    let mut rng = SplitMix64::new(rng::mix(rng::purpose::STUB, &[seed, request_counter]));
    let pred = policy.sample(truth, rng.next_f64());
    Ok(Verdict::one_hot(policy.k(), pred))
}

/// A stub validator that keeps its own request counter.
#[derive(Debug, Clone)]
pub struct StubValidator {
    policy: StubPolicy,
    seed: u64,
    counter: u64,
}

impl StubValidator {
    pub fn new(policy: StubPolicy, seed: u64) -> Self {
        Self {
            policy,
            seed,
            counter: 0,
        }
    }

    pub fn policy(&self) -> &StubPolicy {
        &self.policy
    }

    pub fn classify(&mut self, img: &ImageBuffer) -> Result<Verdict> {
        let v = stub_classify(img, &self.policy, self.seed, self.counter)?;
        self.counter += 1;
        Ok(v)
    }
}
