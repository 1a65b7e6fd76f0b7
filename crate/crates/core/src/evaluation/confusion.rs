use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// k x k counts; rows are the prompted (true) class, columns the predicted
/// class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if counts.iter().any(|row| row.len() != k) {
            return Err(Error::Evaluation("confusion matrix must be square".into()));
        }
        Ok(Self { k, counts })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth][pred]
    }

    pub fn add(&mut self, truth: usize, pred: usize) -> Result<()> {
        if truth >= self.k || pred >= self.k {
            return Err(Error::Evaluation(format!(
                "pair ({truth}, {pred}) out of range for k={}",
                self.k
            )));
        }
        self.counts[truth][pred] += 1;
        Ok(())
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|row| row[c]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn transposed(&self) -> Self {
        let counts = (0..self.k)
            .map(|i| (0..self.k).map(|j| self.counts[j][i]).collect())
            .collect();
        Self { k: self.k, counts }
    }

    /// `(k+1) x (k+1)` CSV with class names as header row and column.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec!["true\\pred".to_string()];
        header.extend(names.iter().cloned());
        w.write_record(&header).expect("write to memory");
        for (i, row) in self.counts.iter().enumerate() {
            let mut rec = vec![names.get(i).cloned().unwrap_or_else(|| i.to_string())];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

/// Counts each `(true, pred)` pair.
pub fn confusion_from_pairs(pairs: &[(usize, usize)], k: usize) -> Result<ConfusionMatrix> {
    let mut m = ConfusionMatrix::zeros(k);
    for &(t, p) in pairs {
        m.add(t, p)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_pairs() {
        let m = confusion_from_pairs(&[(0, 0), (0, 1), (1, 1)], 2).unwrap();
        assert_eq!(m.counts(), &[vec![1, 1], vec![0, 1]]);
    }

    #[test]
    fn empty_is_zero() {
        let m = confusion_from_pairs(&[], 3).unwrap();
        assert_eq!(m, ConfusionMatrix::zeros(3));
        assert_eq!(m.total(), 0);
    }

    #[test]
    fn out_of_range_pair() {
        assert!(confusion_from_pairs(&[(9, 0)], 9).is_err());
        assert!(confusion_from_pairs(&[(0, 9)], 9).is_err());
    }

    #[test]
    fn sums_and_transpose() {
        let m = ConfusionMatrix::from_counts(vec![vec![3, 1], vec![2, 5]]).unwrap();
        assert_eq!(m.row_sum(0), 4);
        assert_eq!(m.col_sum(0), 5);
        assert_eq!(m.transposed().counts(), &[vec![3, 2], vec![1, 5]]);
        assert!(ConfusionMatrix::from_counts(vec![vec![1, 2]]).is_err());
    }

    #[test]
    fn csv_layout() {
        let m = ConfusionMatrix::from_counts(vec![vec![3, 1], vec![2, 5]]).unwrap();
        let csv = m.to_csv(&["a".into(), "b c".into()]);
        assert_eq!(csv, "true\\pred,a,b c\na,3,1\nb c,2,5\n");
    }
}
