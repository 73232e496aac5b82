//! Weighted precision, recall, accuracy and their geometric mean.

pub mod mining;
pub mod probe;

use std::fmt::Write as _;

use serde::Serialize;

use crate::classifiers::{IntentClassifier, Prediction};
use crate::dataset::LabeledUtterance;
use crate::label::Label;

pub use mining::{mine_negatives, mine_negatives_with, Aggregation, CorpusEntry, MinedNegatives, MinedUtterance, MiningError, MiningMethod};
pub use probe::{build_probe_set, probe_recall, Probe, ProbeReport, ProbeVerdict};

/// Credit for predicting POS on a gold-AIC utterance.
pub const AIC_PARTIAL_CREDIT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("{preds} predictions for {gold} gold labels")]
    LengthMismatch { preds: usize, gold: usize },
    #[error("no gold POS examples; recall is undefined")]
    NoPositivesInGold,
    #[error("nothing to evaluate")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPrecision {
    pub value: f64,
    /// Set when nothing was predicted POS and `value` is the vacuous 1.0.
    pub vacuous: bool,
}

/// `gold x predicted` counts in POS, AIC, NEG order.
pub type Confusion = [[u64; 3]; 3];

pub fn confusion(preds: &[Label], gold: &[Label]) -> Result<Confusion, MetricsError> {
    if preds.len() != gold.len() {
        return Err(MetricsError::LengthMismatch { preds: preds.len(), gold: gold.len() });
    }
    let mut c = [[0u64; 3]; 3];
    for (p, g) in preds.iter().zip(gold) {
        c[g.index()][p.index()] += 1;
    }
    Ok(c)
}

fn weighted_precision_from(c: &Confusion) -> WeightedPrecision {
    let predicted_pos: u64 = (0..3).map(|g| c[g][0]).sum();
    if predicted_pos == 0 {
        return WeightedPrecision { value: 1.0, vacuous: true };
    }
    let credit = c[0][0] as f64 + AIC_PARTIAL_CREDIT * c[1][0] as f64;
    WeightedPrecision { value: credit / predicted_pos as f64, vacuous: false }
}

fn recall_from(c: &Confusion) -> Result<f64, MetricsError> {
    let gold_pos: u64 = c[0].iter().sum();
    if gold_pos == 0 {
        return Err(MetricsError::NoPositivesInGold);
    }
    Ok(c[0][0] as f64 / gold_pos as f64)
}

/// Precision on POS predictions with partial credit for gold AIC.
pub fn weighted_precision(preds: &[Label], gold: &[Label]) -> Result<WeightedPrecision, MetricsError> {
    let c = confusion(preds, gold)?;
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let wp = weighted_precision_from(&c);
    if wp.vacuous {
        log::warn!("no POS predictions; weighted precision is vacuously 1.0");
    }
    Ok(wp)
}

/// Fraction of gold POS predicted POS.
pub fn recall_pos(preds: &[Label], gold: &[Label]) -> Result<f64, MetricsError> {
    recall_from(&confusion(preds, gold)?)
}

pub fn geometric_mean(p_w: f64, recall: f64, accuracy: f64) -> f64 {
    (p_w * recall * accuracy).cbrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub p_w: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub m: f64,
    pub confusion: Confusion,
    pub n: u64,
    pub vacuous_precision: bool,
}

impl MetricsReport {
    pub fn from_confusion(c: Confusion) -> Result<Self, MetricsError> {
        let n: u64 = c.iter().flatten().sum();
        if n == 0 {
            return Err(MetricsError::Empty);
        }
        let wp = weighted_precision_from(&c);
        let recall = recall_from(&c)?;
        let accuracy = (0..3).map(|i| c[i][i]).sum::<u64>() as f64 / n as f64;
        Ok(MetricsReport {
            p_w: wp.value,
            recall,
            accuracy,
            m: geometric_mean(wp.value, recall, accuracy),
            confusion: c,
            n,
            vacuous_precision: wp.vacuous,
        })
    }

    pub fn from_labels(preds: &[Label], gold: &[Label]) -> Result<Self, MetricsError> {
        MetricsReport::from_confusion(confusion(preds, gold)?)
    }

    /// Sums the confusion matrices of disjoint evaluations.
    pub fn merge(&self, other: &MetricsReport) -> Result<Self, MetricsError> {
        let mut c = self.confusion;
        for (g, row) in other.confusion.iter().enumerate() {
            for (p, v) in row.iter().enumerate() {
                c[g][p] += v;
            }
        }
        MetricsReport::from_confusion(c)
    }

    /// The four metrics rendered like a results table: x100, one decimal,
    /// with an exact 100 written as `100`.
    pub fn cells(&self) -> [String; 4] {
        [self.p_w, self.recall, self.accuracy, self.m].map(percent)
    }
}

pub fn percent(x: f64) -> String {
    let v = (x * 1000.0).round() / 10.0;
    if v == 100.0 {
        "100".to_string()
    } else {
        format!("{v:.1}")
    }
}

pub const REPORT_HEADER: &str = "model\tsplit\tn\tP_w\tR\tAcc\tM";

pub fn report_row(model: &str, split: &str, r: &MetricsReport) -> String {
    let [p, rec, a, m] = r.cells();
    format!("{model}\t{split}\t{}\t{p}\t{rec}\t{a}\t{m}", r.n)
}

/// Predictions paired with their gold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub predictions: Vec<Prediction>,
    pub gold: Vec<Label>,
}

#[derive(Serialize)]
struct AuditLine<'a> {
    text: &'a str,
    gold: &'a str,
    pred: &'a str,
    correct: bool,
    scores: [f64; 3],
}

#[derive(Serialize)]
struct AuditSummary<'a> {
    summary: &'a MetricsReport,
}

impl Evaluation {
    /// One JSON object per utterance, then a summary line with the
    /// confusion matrix.
    pub fn audit_jsonl(&self) -> String {
        let mut out = String::new();
        for (p, g) in self.predictions.iter().zip(&self.gold) {
            let line = AuditLine {
                text: &p.text,
                gold: g.code(),
                pred: p.label.code(),
                correct: p.label == *g,
                scores: p.scores,
            };
            let _ = writeln!(out, "{}", serde_json::to_string(&line).expect("plain data"));
        }
        let _ = writeln!(out, "{}", serde_json::to_string(&AuditSummary { summary: &self.report }).expect("plain data"));
        out
    }
}

/// Runs `model` over `data` and scores it against the gold labels.
pub fn evaluate(model: &dyn IntentClassifier, data: &[LabeledUtterance]) -> Result<Evaluation, MetricsError> {
    if data.is_empty() {
        return Err(MetricsError::Empty);
    }
    let texts: Vec<&str> = data.iter().map(|u| u.text.as_str()).collect();
    let predictions = model.predict_batch(&texts);
    let gold: Vec<Label> = data.iter().map(|u| u.label).collect();
    let preds: Vec<Label> = predictions.iter().map(|p| p.label).collect();
    let report = MetricsReport::from_labels(&preds, &gold)?;
    Ok(Evaluation { report, predictions, gold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Aic, Neg, Pos};

    #[test]
    fn weighted_precision_examples() {
        let mut preds = vec![Pos; 8];
        let mut gold = vec![Pos, Pos, Pos, Pos, Pos, Pos, Aic, Neg];
        assert_eq!(weighted_precision(&preds, &gold).unwrap().value, 0.78125);
        assert_eq!(weighted_precision(&gold, &gold).unwrap().value, 1.0);
        assert_eq!(weighted_precision(&[Pos], &[Aic]).unwrap().value, 0.25);
        let wp = weighted_precision(&[Neg, Aic], &[Pos, Aic]).unwrap();
        assert!(wp.vacuous && wp.value == 1.0);
        preds.push(Pos);
        assert_eq!(weighted_precision(&preds, &gold), Err(MetricsError::LengthMismatch { preds: 9, gold: 8 }));
        gold.push(Neg);
        assert!(!weighted_precision(&preds, &gold).unwrap().vacuous);
    }

    #[test]
    fn recall_examples() {
        assert_eq!(recall_pos(&[Pos, Pos, Pos, Neg], &[Pos; 4]).unwrap(), 0.75);
        assert_eq!(recall_pos(&[Pos, Pos], &[Pos, Aic]).unwrap(), 1.0);
        assert_eq!(recall_pos(&[Pos], &[Neg]), Err(MetricsError::NoPositivesInGold));
    }

    #[test]
    fn m_examples() {
        assert!((geometric_mean(0.985, 0.946, 0.955) - 0.962).abs() < 5e-4);
        assert_eq!(geometric_mean(1.0, 1.0, 1.0), 1.0);
        assert!((geometric_mean(0.904, 0.934, 0.883) - 0.907).abs() < 5e-4);
    }

    #[test]
    fn report_from_hand_confusion() {
        // gold rows, predicted columns
        let c = [[3, 1, 0], [1, 1, 0], [0, 0, 4]];
        let r = MetricsReport::from_confusion(c).unwrap();
        assert_eq!(r.n, 10);
        assert_eq!(r.p_w, 3.25 / 4.0);
        assert_eq!(r.recall, 0.75);
        assert_eq!(r.accuracy, 0.8);
        assert!((r.m - (0.8125f64 * 0.75 * 0.8).cbrt()).abs() < 1e-15);
        assert_eq!(r.cells(), ["81.3", "75.0", "80.0", "78.7"]);
        let doubled = r.merge(&r).unwrap();
        assert_eq!(doubled.n, 20);
        assert_eq!(doubled.p_w, r.p_w);
    }

    #[test]
    fn percent_formatting() {
        assert_eq!(percent(1.0), "100");
        assert_eq!(percent(0.9999), "100");
        assert_eq!(percent(0.9994), "99.9");
        assert_eq!(percent(0.0), "0.0");
    }
}
