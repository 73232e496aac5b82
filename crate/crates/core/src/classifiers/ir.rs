//! Nearest-neighbor retrieval: predict the label of the closest training
//! utterance in TF-IDF space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tfidf::{TfIdfVector, Vocabulary};
use super::{check_classes, ClassifierError, Example, IntentClassifier, Prediction};
use crate::label::Label;

/// Index of the training vector closest to `query` by Euclidean distance.
/// Ties go to the lowest index. Panics if `train` is empty.
pub fn nearest(train: &[TfIdfVector], query: &TfIdfVector) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, t) in train.iter().enumerate() {
        let d = query.sq_distance(t);
        if d < best.1 {
            best = (i, d);
        }
    }
    (best.0, best.1.sqrt())
}

/// Label of the nearest training vector.
pub fn predict_ir(train: &[(TfIdfVector, Label)], query: &TfIdfVector) -> Label {
    let vectors: Vec<TfIdfVector> = train.iter().map(|(v, _)| v.clone()).collect();
    train[nearest(&vectors, query).0].1
}

/// Stores the training texts; vectors are rebuilt on load.
#[derive(Debug, Clone, PartialEq)]
pub struct IrModel {
    vocab: Vocabulary,
    texts: Vec<String>,
    labels: Vec<Label>,
    vectors: Vec<TfIdfVector>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct IrParts {
    pub vocab: Vocabulary,
    pub texts: Vec<String>,
    pub labels: Vec<Label>,
}

impl IrModel {
    pub fn train<E: Example>(train: &[E]) -> Result<Self, ClassifierError> {
        check_classes(train)?;
        let vocab = Vocabulary::fit(train.iter().map(|e| e.text()))?;
        let texts = train.iter().map(|e| e.text().to_string()).collect();
        let labels = train.iter().map(|e| e.label()).collect();
        Ok(IrModel::from_parts(IrParts { vocab, texts, labels }))
    }

    pub(crate) fn from_parts(p: IrParts) -> Self {
        let vectors = p.texts.iter().map(|t| p.vocab.vectorize(t)).collect();
        IrModel { vocab: p.vocab, texts: p.texts, labels: p.labels, vectors }
    }

    pub(crate) fn parts(&self) -> IrParts {
        IrParts { vocab: self.vocab.clone(), texts: self.texts.clone(), labels: self.labels.clone() }
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    /// The matched training utterance, its label and the distance.
    pub fn neighbor(&self, text: &str) -> (&str, Label, f64) {
        let (i, d) = nearest(&self.vectors, &self.vocab.vectorize(text));
        (&self.texts[i], self.labels[i], d)
    }
}

impl IntentClassifier for IrModel {
    fn id(&self) -> &str {
        "ir"
    }

    fn predict(&self, text: &str) -> Prediction {
        let (_, label, _) = self.neighbor(text);
        let mut scores = [0.0; 3];
        scores[label.index()] = 1.0;
        Prediction { text: text.to_string(), label, scores }
    }

    fn predict_batch(&self, texts: &[&str]) -> Vec<Prediction> {
        texts.par_iter().with_min_len(16).map(|t| self.predict(t)).collect()
    }
}
