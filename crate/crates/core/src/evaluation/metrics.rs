use serde::{Deserialize, Serialize};

use super::ConfusionMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class_id: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Unweighted means of the per-class values. `f1` is the mean of per-class
/// F1 scores, not the harmonic mean of `precision` and `recall`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Precision = diagonal / column sum, recall = diagonal / row sum, both 0
/// when the denominator is 0.
pub fn metrics_from_confusion(m: &ConfusionMatrix) -> (Vec<ClassMetrics>, MacroMetrics) {
    let k = m.k();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = m.get(c, c);
            let precision = ratio(tp, m.col_sum(c));
            let recall = ratio(tp, m.row_sum(c));
            ClassMetrics {
                class_id: c,
                precision,
                recall,
                f1: f1_score(precision, recall),
                support: m.row_sum(c),
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| {
        if k == 0 {
            0.0
        } else {
            per_class.iter().map(f).sum::<f64>() / k as f64
        }
    };
    let macros = MacroMetrics {
        precision: mean(|c| c.precision),
        recall: mean(|c| c.recall),
        f1: mean(|c| c.f1),
    };
    (per_class, macros)
}
