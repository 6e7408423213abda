//! Classification report: accuracy, per-label precision/recall/F1, confusion matrix.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub labels: Vec<String>,
    pub accuracy: f64,
    pub per_label: Vec<LabelMetrics>,
    /// Rows are true labels, columns predicted labels, both in `labels` order.
    pub confusion: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_scores: Option<Vec<f64>>,
}

impl MetricsReport {
    /// Builds the report from label indices into `labels`.
    ///
    /// # Panics
    /// If `truth` and `predicted` differ in length or an index is out of range.
    pub fn from_indices(labels: &[String], truth: &[usize], predicted: &[usize]) -> Self {
        assert_eq!(
            truth.len(),
            predicted.len(),
            "truth/prediction length mismatch"
        );
        let l = labels.len();
        let mut confusion = vec![vec![0usize; l]; l];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        let total = truth.len();
        let correct: usize = (0..l).map(|i| confusion[i][i]).sum();
        let per_label = (0..l)
            .map(|i| {
                let tp = confusion[i][i] as f64;
                let support: usize = confusion[i].iter().sum();
                let predicted_i: usize = confusion.iter().map(|row| row[i]).sum();
                let precision = ratio(tp, predicted_i as f64);
                let recall = ratio(tp, support as f64);
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                LabelMetrics {
                    label: labels[i].clone(),
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();
        Self {
            labels: labels.to_vec(),
            accuracy: ratio(correct as f64, total as f64),
            per_label,
            confusion,
            fold_scores: None,
        }
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn macro_f1(&self) -> f64 {
        mean(self.per_label.iter().map(|m| m.f1))
    }

    pub fn macro_precision(&self) -> f64 {
        mean(self.per_label.iter().map(|m| m.precision))
    }

    pub fn macro_recall(&self) -> f64 {
        mean(self.per_label.iter().map(|m| m.recall))
    }

    pub fn label(&self, name: &str) -> Option<&LabelMetrics> {
        self.per_label.iter().find(|m| m.label == name)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn mean(it: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = it.len();
    if n == 0 {
        0.0
    } else {
        it.sum::<f64>() / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hand_counted_example() {
        // predictions [A,A,B] vs truth [A,B,B]
        let r = MetricsReport::from_indices(&labels(&["A", "B"]), &[0, 1, 1], &[0, 0, 1]);
        assert!((r.accuracy - 2.0 / 3.0).abs() < 1e-12);
        let a = r.label("A").unwrap();
        assert!((a.precision - 0.5).abs() < 1e-12);
        assert!((a.recall - 1.0).abs() < 1e-12);
        assert!((a.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.confusion, vec![vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn perfect_and_inverted() {
        let l = labels(&["A", "B"]);
        let perfect = MetricsReport::from_indices(&l, &[0, 1, 1, 0], &[0, 1, 1, 0]);
        assert_eq!(perfect.accuracy, 1.0);
        assert_eq!(perfect.confusion, vec![vec![2, 0], vec![0, 2]]);
        assert_eq!(perfect.macro_f1(), 1.0);
        let wrong = MetricsReport::from_indices(&l, &[0, 1, 1, 0], &[1, 0, 0, 1]);
        assert_eq!(wrong.accuracy, 0.0);
        assert!(wrong.confusion.iter().enumerate().all(|(i, r)| r[i] == 0));
        assert!(wrong.per_label.iter().all(|m| m.f1 == 0.0));
    }

    proptest! {
        #[test]
        fn report_invariants(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..60)) {
            let (truth, pred): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let r = MetricsReport::from_indices(&labels(&["0", "1", "2", "3"]), &truth, &pred);
            prop_assert_eq!(r.total(), truth.len());
            let trace: usize = (0..4).map(|i| r.confusion[i][i]).sum();
            prop_assert!((r.accuracy - trace as f64 / truth.len() as f64).abs() < 1e-12);
            for (i, m) in r.per_label.iter().enumerate() {
                prop_assert_eq!(r.confusion[i].iter().sum::<usize>(), m.support);
                for v in [m.precision, m.recall, m.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                if m.precision + m.recall > 0.0 {
                    let f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                    prop_assert!((m.f1 - f1).abs() < 1e-12);
                }
            }
        }
    }
}
