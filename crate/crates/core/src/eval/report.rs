use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ClassMetrics, ConfusionMatrix, Prf};
use crate::corpus::LabelSet;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// What produced the numbers; echoed verbatim into report.json.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub method: String,
    pub seed: u64,
    pub config: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportClassRow {
    pub id: String,
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub method: String,
    pub seed: u64,
    pub total: u64,
    pub accuracy: f64,
    pub per_class: Vec<ReportClassRow>,
    pub macro_avg: Prf,
    pub weighted_avg: Prf,
    /// Raw counts, rows actual, columns predicted.
    pub confusion: Vec<Vec<u64>>,
    pub config: serde_json::Value,
}

impl Report {
    pub fn new(labels: &LabelSet, metrics: &ClassMetrics, cm: &ConfusionMatrix, meta: &RunMetadata) -> Self {
        let per_class = labels
            .iter()
            .zip(&metrics.per_class)
            .map(|(l, r)| ReportClassRow {
                id: l.id.clone(),
                name: l.name.clone(),
                precision: r.precision,
                recall: r.recall,
                f1: r.f1,
                support: r.support,
            })
            .collect();
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            method: meta.method.clone(),
            seed: meta.seed,
            total: cm.total(),
            accuracy: cm.accuracy(),
            per_class,
            macro_avg: metrics.macro_avg,
            weighted_avg: metrics.weighted_avg,
            confusion: cm.counts().to_vec(),
            config: meta.config.clone(),
        }
    }
}

pub fn report_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn csv_header(labels: &LabelSet) -> String {
    let mut s = String::from("actual\\predicted");
    for l in labels.iter() {
        s.push(',');
        s.push_str(&l.id);
    }
    s.push('\n');
    s
}

pub fn confusion_csv(labels: &LabelSet, cm: &ConfusionMatrix) -> String {
    let mut s = csv_header(labels);
    for (l, row) in labels.iter().zip(cm.counts()) {
        s.push_str(&l.id);
        for c in row {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
    }
    s
}

pub fn normalized_confusion_csv(labels: &LabelSet, cm: &ConfusionMatrix) -> String {
    let mut s = csv_header(labels);
    for (l, row) in labels.iter().zip(cm.normalized()) {
        s.push_str(&l.id);
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

/// Fixed-width ID / Label / Precision / Recall / F1 table.
pub fn text_table(report: &Report) -> String {
    let name_w = report
        .per_class
        .iter()
        .map(|r| r.name.len())
        .max()
        .unwrap_or(5)
        .max("Weighted average".len());
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8}  {:<name_w$}  {:>9}  {:>6}  {:>8}  {:>7}",
        "ID", "Label", "Precision", "Recall", "F1-Score", "Support"
    );
    let _ = writeln!(s, "{}", "-".repeat(8 + name_w + 9 + 6 + 8 + 7 + 10));
    for r in &report.per_class {
        let _ = writeln!(
            s,
            "{:<8}  {:<name_w$}  {:>9.2}  {:>6.2}  {:>8.2}  {:>7}",
            r.id, r.name, r.precision, r.recall, r.f1, r.support
        );
    }
    for (label, p) in [("Macro average", &report.macro_avg), ("Weighted average", &report.weighted_avg)] {
        let _ = writeln!(
            s,
            "{:<8}  {:<name_w$}  {:>9.2}  {:>6.2}  {:>8.2}  {:>7}",
            "", label, p.precision, p.recall, p.f1, report.total
        );
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportPaths {
    pub report: PathBuf,
    pub confusion: PathBuf,
    pub confusion_normalized: PathBuf,
    pub table: PathBuf,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes report.json, confusion.csv, confusion_normalized.csv and table.txt
/// into `dir` (created if missing). Output bytes depend only on the inputs.
pub fn render_report(
    labels: &LabelSet,
    metrics: &ClassMetrics,
    cm: &ConfusionMatrix,
    meta: &RunMetadata,
    dir: &Path,
) -> Result<ReportPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let report = Report::new(labels, metrics, cm, meta);
    let paths = ReportPaths {
        report: dir.join("report.json"),
        confusion: dir.join("confusion.csv"),
        confusion_normalized: dir.join("confusion_normalized.csv"),
        table: dir.join("table.txt"),
    };
    write(&paths.report, &report_json(&report))?;
    write(&paths.confusion, &confusion_csv(labels, cm))?;
    write(&paths.confusion_normalized, &normalized_confusion_csv(labels, cm))?;
    write(&paths.table, &text_table(&report))?;
    Ok(paths)
}

/// One line of the model comparison table (macro-averaged scores).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub weighted_f1: f64,
}

impl ComparisonRow {
    pub fn from_report(model: &str, report: &Report) -> Self {
        ComparisonRow {
            model: model.to_string(),
            precision: report.macro_avg.precision,
            recall: report.macro_avg.recall,
            f1: report.macro_avg.f1,
            weighted_f1: report.weighted_avg.f1,
        }
    }
}

pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let w = rows.iter().map(|r| r.model.len()).max().unwrap_or(5).max(5);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<w$} | {:>9} | {:>6} | {:>8} | {:>11}",
        "Model", "Precision", "Recall", "F1-Score", "Weighted F1"
    );
    let _ = writeln!(s, "{}", "-".repeat(w + 48));
    for r in rows {
        let _ = writeln!(
            s,
            "{:<w$} | {:>9.3} | {:>6.3} | {:>8.3} | {:>11.3}",
            r.model, r.precision, r.recall, r.f1, r.weighted_f1
        );
    }
    s
}

/// Writes comparison.txt and comparison.json into `dir`.
pub fn render_comparison(rows: &[ComparisonRow], dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let txt = dir.join("comparison.txt");
    let json = dir.join("comparison.json");
    write(&txt, &comparison_table(rows))?;
    let mut body = serde_json::to_string_pretty(rows)?;
    body.push('\n');
    write(&json, &body)?;
    Ok((txt, json))
}

#[cfg(test)]
mod tests {
    use super::super::{confusion_matrix, per_class_prf};
    use super::*;

    fn sample() -> (LabelSet, ClassMetrics, ConfusionMatrix, RunMetadata) {
        let labels = LabelSet::nass();
        let cm = confusion_matrix(&[0, 1, 2, 3, 3, 5], &[0, 1, 2, 3, 4, 5], 8).unwrap();
        let m = per_class_prf(&cm);
        let meta = RunMetadata {
            method: "bilstm-doc2vec".into(),
            seed: 3,
            config: serde_json::json!({"b": 1, "a": [1, 2]}),
        };
        (labels, m, cm, meta)
    }

    #[test]
    fn rendering_is_byte_stable() {
        let (labels, m, cm, meta) = sample();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let pa = render_report(&labels, &m, &cm, &meta, a.path()).unwrap();
        let pb = render_report(&labels, &m, &cm, &meta, b.path()).unwrap();
        for (x, y) in [(pa.report, pb.report), (pa.confusion, pb.confusion), (pa.table, pb.table)] {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
    }

    #[test]
    fn csv_layout() {
        let (labels, _, cm, _) = sample();
        let csv = confusion_csv(&labels, &cm);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("actual\\predicted,NASS-1,NASS-2"));
        assert_eq!(lines.next().unwrap(), "NASS-1,1,0,0,0,0,0,0,0");
        let norm = normalized_confusion_csv(&labels, &cm);
        let row4: f64 = norm.lines().nth(4).unwrap().split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((row4 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn report_round_trips_and_table_lists_all_classes() {
        let (labels, m, cm, meta) = sample();
        let r = Report::new(&labels, &m, &cm, &meta);
        let back: Report = serde_json::from_str(&report_json(&r)).unwrap();
        assert_eq!(back, r);
        let t = text_table(&r);
        assert_eq!(t.lines().count(), 2 + 8 + 2);
        assert!(t.contains("Health and Agriculture"));
    }

    #[test]
    fn unwritable_directory_is_an_error() {
        let (labels, m, cm, meta) = sample();
        let f = tempfile::NamedTempFile::new().unwrap();
        assert!(render_report(&labels, &m, &cm, &meta, &f.path().join("x")).is_err());
    }

    #[test]
    fn comparison_contains_every_row() {
        let rows = vec![
            ComparisonRow { model: "BiLSTM + Doc2Vec".into(), precision: 0.9, recall: 0.9, f1: 0.9, weighted_f1: 0.9 },
            ComparisonRow { model: "SVM + TFIDF".into(), precision: 0.8, recall: 0.7, f1: 0.75, weighted_f1: 0.76 },
        ];
        let t = comparison_table(&rows);
        assert!(t.contains("BiLSTM + Doc2Vec"));
        assert!(t.contains("0.750"));
    }
}
