use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::EmotionLabel;

/// Square count matrix, rows = truth, columns = prediction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(n: usize) -> Self {
        ConfusionMatrix { counts: vec![vec![0; n]; n] }
    }

    pub fn from_rows(counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = counts.len();
        if n == 0 || counts.iter().any(|r| r.len() != n) {
            return Err(Error::param("confusion matrix must be square and non-empty"));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes() != self.classes() {
            return Err(Error::param("cannot pool confusion matrices of different sizes"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(())
    }

    /// Fixed-width table with emotion names when the matrix is 5 × 5.
    pub fn render(&self) -> String {
        let n = self.classes();
        let names: Vec<String> = if n == EmotionLabel::ALL.len() {
            EmotionLabel::ALL.iter().map(|l| l.name().to_string()).collect()
        } else {
            (0..n).map(|i| format!("class{i}")).collect()
        };
        let width = names.iter().map(|s| s.len()).max().unwrap_or(5).max(6) + 1;
        let mut out = format!("{:>width$}", "truth\\pred");
        for name in &names {
            out.push_str(&format!("{name:>width$}"));
        }
        out.push('\n');
        for (name, row) in names.iter().zip(&self.counts) {
            out.push_str(&format!("{name:>width$}"));
            for c in row {
                out.push_str(&format!("{c:>width$}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Counts `(truth, prediction)` pairs into an `n_classes` square matrix.
pub fn confusion_matrix(preds: &[usize], labels: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::param(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros(n_classes);
    for (&p, &l) in preds.iter().zip(labels) {
        if p >= n_classes || l >= n_classes {
            return Err(Error::Label(format!("class id {} outside 0..{n_classes}", p.max(l))));
        }
        cm.counts[l][p] += 1;
    }
    Ok(cm)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    pub macro_f1: f64,
    /// Unweighted accuracy: mean per-class recall.
    pub ua: f64,
    /// Weighted accuracy: trace over total.
    pub wa: f64,
    /// Metrics that hit a zero denominator and were scored 0.
    pub flags: Vec<String>,
}

fn ratio(num: u64, den: u64, flag: impl FnOnce() -> String, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(flag());
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::protocol("cannot score an empty confusion matrix"));
    }
    let n = cm.classes();
    let mut flags = Vec::new();
    let per_class: Vec<ClassMetrics> = (0..n)
        .map(|o| {
            let tp = cm.counts[o][o];
            let predicted = cm.col_sum(o);
            let support = cm.row_sum(o);
            let precision = ratio(tp, predicted, || format!("class {o}: precision undefined (no predictions)"), &mut flags);
            let recall = ratio(tp, support, || format!("class {o}: recall undefined (no support)"), &mut flags);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                flags.push(format!("class {o}: F1 undefined (precision + recall = 0)"));
                0.0
            };
            ClassMetrics { precision, recall, f1, support }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / n as f64;
    let ua = per_class.iter().map(|c| c.recall).sum::<f64>() / n as f64;
    let wa = cm.trace() as f64 / total as f64;
    Ok(MetricsReport {
        confusion: cm.clone(),
        per_class,
        macro_f1,
        ua,
        wa,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counts() {
        let cm = confusion_matrix(&[0, 1, 1, 2], &[0, 1, 2, 2], 5).unwrap();
        let mut want = ConfusionMatrix::zeros(5);
        want.counts[0][0] = 1;
        want.counts[1][1] = 1;
        want.counts[2][1] = 1;
        want.counts[2][2] = 1;
        assert_eq!(cm, want);
        assert!(confusion_matrix(&[0], &[0, 1], 5).is_err());
    }

    #[test]
    fn two_class_case() {
        let cm = ConfusionMatrix::from_rows(vec![vec![3, 1], vec![2, 4]]).unwrap();
        let m = compute_metrics(&cm).unwrap();
        assert_eq!(m.per_class[0].precision, 3.0 / 5.0);
        assert_eq!(m.per_class[0].recall, 3.0 / 4.0);
        assert!((m.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.per_class[1].precision, 4.0 / 5.0);
        assert_eq!(m.per_class[1].recall, 2.0 / 3.0);
        assert_eq!(m.wa, 7.0 / 10.0);
        assert!((m.ua - 17.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let labels: Vec<usize> = (0..25).map(|i| i % 5).collect();
        let m = compute_metrics(&confusion_matrix(&labels, &labels, 5).unwrap()).unwrap();
        assert_eq!((m.ua, m.wa, m.macro_f1), (1.0, 1.0, 1.0));
        assert!(m.per_class.iter().all(|c| c.precision == 1.0 && c.recall == 1.0 && c.f1 == 1.0));
        assert!(m.flags.is_empty());
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let cm = confusion_matrix(&[0, 0], &[0, 1], 3).unwrap();
        let m = compute_metrics(&cm).unwrap();
        assert_eq!(m.per_class[2].recall, 0.0);
        assert!(!m.flags.is_empty());
        assert!(compute_metrics(&ConfusionMatrix::zeros(5)).is_err());
    }

    #[test]
    fn render_has_a_row_per_class() {
        let cm = ConfusionMatrix::zeros(5);
        let text = cm.render();
        assert_eq!(text.lines().count(), 6);
        assert!(text.contains("happiness"));
    }
}
