//! Precision/recall/F1, confusion matrices and report rendering.

mod report;

pub use report::{
    comparison_table, confusion_csv, normalized_confusion_csv, render_comparison, render_report, report_json,
    text_table, ComparisonRow, Report, ReportClassRow, ReportPaths, RunMetadata, REPORT_SCHEMA_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;
use crate::error::{Error, Result};

/// Rows are actual classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if let Some(row) = counts.iter().find(|r| r.len() != k) {
            return Err(Error::dim("confusion row", k, row.len()));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted_count(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }

    /// Each row divided by its sum; rows of absent classes stay all-zero.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let s: u64 = row.iter().sum();
                row.iter().map(|&c| ratio(c, s)).collect()
            })
            .collect()
    }
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::dim("predictions", y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (&a, &p) in y_true.iter().zip(y_pred) {
        if let Some(&label) = [a, p].iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        cm.counts[a][p] += 1;
    }
    Ok(cm)
}

/// Same as [`confusion_matrix`] over label ids such as `"NASS-4"`.
pub fn confusion_matrix_by_id(labels: &LabelSet, y_true: &[&str], y_pred: &[&str]) -> Result<ConfusionMatrix> {
    let index = |id: &str| {
        labels.index_of(id).ok_or_else(|| Error::UnknownLabel {
            id: String::new(),
            label: id.to_string(),
        })
    };
    let t = y_true.iter().map(|s| index(s)).collect::<Result<Vec<_>>>()?;
    let p = y_pred.iter().map(|s| index(s)).collect::<Result<Vec<_>>>()?;
    confusion_matrix(&t, &p, labels.len())
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean `2PR / (P + R)`, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        Prf {
            precision,
            recall,
            f1: f1_score(precision, recall),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub per_class: Vec<ClassRow>,
    pub macro_avg: Prf,
    pub weighted_avg: Prf,
}

/// Per-class precision, recall and F1 with 0/0 taken as 0. Aggregates are
/// filled in; the weighted row is zero if the matrix is empty.
pub fn per_class_prf(cm: &ConfusionMatrix) -> ClassMetrics {
    let per_class: Vec<ClassRow> = (0..cm.classes())
        .map(|c| {
            let tp = cm.get(c, c);
            let precision = ratio(tp, cm.predicted_count(c));
            let recall = ratio(tp, cm.support(c));
            ClassRow {
                precision,
                recall,
                f1: f1_score(precision, recall),
                support: cm.support(c),
            }
        })
        .collect();
    let (macro_avg, weighted_avg) = aggregate_metrics(&per_class).unwrap_or_else(|_| (macro_mean(&per_class), Prf::default()));
    ClassMetrics {
        per_class,
        macro_avg,
        weighted_avg,
    }
}

fn macro_mean(rows: &[ClassRow]) -> Prf {
    let n = rows.len().max(1) as f64;
    Prf {
        precision: rows.iter().map(|r| r.precision).sum::<f64>() / n,
        recall: rows.iter().map(|r| r.recall).sum::<f64>() / n,
        f1: rows.iter().map(|r| r.f1).sum::<f64>() / n,
    }
}

/// Macro (unweighted mean over all classes) and support-weighted aggregates.
pub fn aggregate_metrics(rows: &[ClassRow]) -> Result<(Prf, Prf)> {
    let total: u64 = rows.iter().map(|r| r.support).sum();
    if total == 0 {
        return Err(Error::ZeroSupport);
    }
    let w = |f: fn(&ClassRow) -> f64| rows.iter().map(|r| r.support as f64 * f(r)).sum::<f64>() / total as f64;
    let weighted = Prf {
        precision: w(|r| r.precision),
        recall: w(|r| r.recall),
        f1: w(|r| r.f1),
    };
    Ok((macro_mean(rows), weighted))
}
