use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::rng::{self, SplitMix64};

/// Train fraction as an exact rational `numerator / denominator` plus the
/// shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    numerator: u64,
    denominator: u64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            numerator: 4,
            denominator: 5,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn new(numerator: u64, denominator: u64, seed: u64) -> Result<Self> {
        if denominator == 0 || numerator == 0 || numerator >= denominator {
            return Err(Error::Dataset(format!(
                "train fraction {numerator}/{denominator} must lie strictly between 0 and 1"
            )));
        }
        Ok(Self {
            numerator,
            denominator,
            seed,
        })
    }

    /// Parses a decimal such as `0.8` exactly (no binary float rounding).
    pub fn from_decimal(text: &str, seed: u64) -> Result<Self> {
        let bad = || Error::Dataset(format!("bad fraction {text:?}"));
        let text = text.trim();
        let (int, frac) = text.split_once('.').unwrap_or((text, ""));
        if frac.len() > 12
            || !int.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac_v: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac_v))
            .ok_or_else(bad)?;
        Self::new(num, den, seed)
    }

    pub fn fraction(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// round-half-up(fraction * n) in exact integer arithmetic.
    pub fn train_count(&self, n: usize) -> usize {
        let n = n as u128;
        let (num, den) = (self.numerator as u128, self.denominator as u128);
        ((2 * num * n + den) / (2 * den)) as usize
    }
}

/// Splits each class independently: a seeded shuffle within the class picks
/// `round(fraction * n_c)` entries for training, the rest go to test. Both
/// outputs keep the input's entry order.
pub fn stratified_split(
    manifest: &DatasetManifest,
    spec: &SplitSpec,
) -> Result<(DatasetManifest, DatasetManifest)> {
    let k = manifest.k();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, e) in manifest.entries.iter().enumerate() {
        by_class[e.class_id].push(i);
    }
    let mut in_train = vec![false; manifest.entries.len()];
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::Dataset(format!(
                "class {class} has {} entr{}; stratified split needs at least 2",
                members.len(),
                if members.len() == 1 { "y" } else { "ies" }
            )));
        }
        let mut rng = SplitMix64::new(rng::mix(rng::purpose::SPLIT, &[spec.seed, class as u64]));
        rng.shuffle(members);
        for &i in &members[..spec.train_count(members.len())] {
            in_train[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, e) in manifest.entries.iter().enumerate() {
        if in_train[i] { &mut train } else { &mut test }.push(e.clone());
    }
    Ok((
        DatasetManifest::from_entries(manifest.root.clone(), train, k)?,
        DatasetManifest::from_entries(manifest.root.clone(), test, k)?,
    ))
}
