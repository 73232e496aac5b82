//! Intent classifiers and the shared prediction interface.

pub mod gradcheck;
pub mod ir;
pub mod logistic;
pub mod model_io;
pub mod ngram;
pub mod random;
pub mod tfidf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledUtterance;
use crate::label::Label;

pub use ir::IrModel;
pub use logistic::{train_bow_lr, BowLrModel, BowLrParams};
pub use model_io::{load_model, save_model, ModelIoError, SavedModel};
pub use ngram::{train_ngram_linear, NgramModel, NgramParams};
pub use random::RandomGuess;
pub use tfidf::{TfIdfVector, Vocabulary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifierError {
    #[error("training data is empty")]
    EmptyCorpus,
    #[error("training data has no {0} examples")]
    MissingClass(Label),
    #[error("invalid hyperparameter: {0}")]
    InvalidParams(String),
}

/// A classifier's output for one utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub text: String,
    pub label: Label,
    /// Per-class scores in POS, AIC, NEG order.
    pub scores: [f64; 3],
}

impl Prediction {
    pub fn from_scores(text: impl Into<String>, scores: [f64; 3]) -> Self {
        Prediction { text: text.into(), label: argmax(&scores), scores }
    }
}

/// Highest-scoring class; ties go to the earlier class in POS, AIC, NEG order.
pub fn argmax(scores: &[f64; 3]) -> Label {
    let mut best = 0;
    for i in 1..3 {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    Label::ALL[best]
}

pub trait IntentClassifier: Sync {
    /// Short identifier used in reports and guard decisions.
    fn id(&self) -> &str;

    fn predict(&self, text: &str) -> Prediction;

    /// Predicts a batch in parallel; output order matches input order.
    fn predict_batch(&self, texts: &[&str]) -> Vec<Prediction> {
        texts.par_iter().map(|t| self.predict(t)).collect()
    }
}

/// Anything usable as a training example.
pub trait Example {
    fn text(&self) -> &str;
    fn label(&self) -> Label;
}

impl Example for LabeledUtterance {
    fn text(&self) -> &str {
        &self.text
    }
    fn label(&self) -> Label {
        self.label
    }
}

impl<S: AsRef<str>> Example for (S, Label) {
    fn text(&self) -> &str {
        self.0.as_ref()
    }
    fn label(&self) -> Label {
        self.1
    }
}

impl<E: Example + ?Sized> Example for &E {
    fn text(&self) -> &str {
        (**self).text()
    }
    fn label(&self) -> Label {
        (**self).label()
    }
}

pub(crate) fn check_classes<E: Example>(train: &[E]) -> Result<(), ClassifierError> {
    if train.is_empty() {
        return Err(ClassifierError::EmptyCorpus);
    }
    let mut seen = [false; 3];
    for e in train {
        seen[e.label().index()] = true;
    }
    match Label::ALL.iter().find(|l| !seen[l.index()]) {
        Some(&l) => Err(ClassifierError::MissingClass(l)),
        None => Ok(()),
    }
}

/// Numerically stable softmax.
pub(crate) fn softmax(z: [f64; 3]) -> [f64; 3] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_follow_class_order() {
        assert_eq!(argmax(&[1.0, 1.0, 1.0]), Label::Pos);
        assert_eq!(argmax(&[0.0, 2.0, 2.0]), Label::Aic);
        assert_eq!(argmax(&[0.1, 0.2, 0.7]), Label::Neg);
    }

    #[test]
    fn missing_class_reported() {
        let train = [("a", Label::Pos), ("b", Label::Neg)];
        assert_eq!(check_classes(&train), Err(ClassifierError::MissingClass(Label::Aic)));
        assert_eq!(check_classes::<(&str, Label)>(&[]), Err(ClassifierError::EmptyCorpus));
    }

    #[test]
    fn softmax_is_stable() {
        let p = softmax([1000.0, 1000.0, -1000.0]);
        assert!((p[0] - 0.5).abs() < 1e-12 && p[2] == 0.0);
    }
}
