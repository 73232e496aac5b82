//! Multinomial logistic regression over TF-IDF bag-of-words features.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::tfidf::{TfIdfVector, Vocabulary};
use super::{check_classes, softmax, ClassifierError, Example, IntentClassifier, Prediction};
use crate::label::Label;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowLrParams {
    /// Initial step size; step `t` (1-based) uses `learning_rate / sqrt(t)`.
    pub learning_rate: f64,
    /// L2 penalty on the weights (not the biases).
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Reshuffle the examples every epoch. When off, batches follow input order.
    pub shuffle: bool,
}

impl Default for BowLrParams {
    fn default() -> Self {
        BowLrParams { learning_rate: 8.0, l2: 1e-4, epochs: 100, batch_size: 32, shuffle: true }
    }
}

impl BowLrParams {
    fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidParams(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad("l2 must be non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowLrModel {
    pub vocab: Vocabulary,
    /// Class-major `3 x |V|` matrix in POS, AIC, NEG order.
    pub weights: Vec<f64>,
    pub biases: [f64; 3],
    pub params: BowLrParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub biases: [f64; 3],
}

impl BowLrModel {
    fn zeroed(vocab: Vocabulary, params: BowLrParams) -> Self {
        let weights = vec![0.0; 3 * vocab.len()];
        BowLrModel { vocab, weights, biases: [0.0; 3], params }
    }

    fn logits(&self, x: &TfIdfVector) -> [f64; 3] {
        let v = self.vocab.len();
        let mut z = self.biases;
        for &(i, w) in &x.entries {
            for (c, zc) in z.iter_mut().enumerate() {
                *zc += self.weights[c * v + i as usize] * w;
            }
        }
        z
    }

    /// Class probabilities in POS, AIC, NEG order.
    pub fn probabilities(&self, x: &TfIdfVector) -> [f64; 3] {
        softmax(self.logits(x))
    }

    /// Mean cross-entropy over `batch` plus `l2 / 2 * |W|^2`, and its gradient.
    pub fn loss_and_gradient(&self, batch: &[(TfIdfVector, Label)]) -> (f64, Gradient) {
        let mut g = Gradient { weights: vec![0.0; self.weights.len()], biases: [0.0; 3] };
        let loss = self.accumulate(batch.iter().map(|(x, y)| (x, *y)), batch.len(), &mut g);
        (loss, g)
    }

    /// Objective only, without the gradient.
    pub fn loss(&self, data: &[(TfIdfVector, Label)]) -> f64 {
        let ce: f64 = data.iter().map(|(x, y)| -self.probabilities(x)[y.index()].ln()).sum();
        ce / data.len() as f64 + self.penalty()
    }

    fn penalty(&self) -> f64 {
        0.5 * self.params.l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    fn accumulate<'a>(
        &self,
        batch: impl Iterator<Item = (&'a TfIdfVector, Label)>,
        n: usize,
        g: &mut Gradient,
    ) -> f64 {
        let v = self.vocab.len();
        let scale = 1.0 / n as f64;
        g.weights.iter_mut().zip(&self.weights).for_each(|(gw, w)| *gw = self.params.l2 * w);
        g.biases = [0.0; 3];
        let mut ce = 0.0;
        for (x, y) in batch {
            let p = self.probabilities(x);
            ce -= p[y.index()].ln();
            for c in 0..3 {
                let d = (p[c] - if c == y.index() { 1.0 } else { 0.0 }) * scale;
                g.biases[c] += d;
                for &(i, w) in &x.entries {
                    g.weights[c * v + i as usize] += d * w;
                }
            }
        }
        ce * scale + self.penalty()
    }

    fn step(&mut self, g: &Gradient, lr: f64) {
        self.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= lr * d);
        self.biases.iter_mut().zip(&g.biases).for_each(|(b, d)| *b -= lr * d);
    }
}

impl IntentClassifier for BowLrModel {
    fn id(&self) -> &str {
        "bowlr"
    }

    fn predict(&self, text: &str) -> Prediction {
        Prediction::from_scores(text, self.probabilities(&self.vocab.vectorize(text)))
    }
}

/// Trains on `train` with mini-batch gradient descent. Deterministic given
/// `seed`.
pub fn train_bow_lr<E: Example>(train: &[E], params: &BowLrParams, seed: u64) -> Result<BowLrModel, ClassifierError> {
    train_bow_lr_traced(train, params, seed).map(|(m, _)| m)
}

/// Like [`train_bow_lr`], also returning the full training objective before
/// the first epoch and after each epoch.
pub fn train_bow_lr_traced<E: Example>(
    train: &[E],
    params: &BowLrParams,
    seed: u64,
) -> Result<(BowLrModel, Vec<f64>), ClassifierError> {
    params.validate()?;
    check_classes(train)?;
    let vocab = Vocabulary::fit(train.iter().map(|e| e.text()))?;
    let data: Vec<(TfIdfVector, Label)> = train.iter().map(|e| (vocab.vectorize(e.text()), e.label())).collect();
    let mut model = BowLrModel::zeroed(vocab, params.clone());
    let mut grad = Gradient { weights: vec![0.0; model.weights.len()], biases: [0.0; 3] };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = seed::named_rng(seed, "bowlr/shuffle");
    let mut trace = vec![model.loss(&data)];
    let mut t = 0u64;
    for _ in 0..params.epochs {
        if params.shuffle {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(params.batch_size) {
            t += 1;
            model.accumulate(chunk.iter().map(|&i| (&data[i].0, data[i].1)), chunk.len(), &mut grad);
            model.step(&grad, params.learning_rate / (t as f64).sqrt());
        }
        trace.push(model.loss(&data));
    }
    log::debug!("bowlr: |V|={} final loss {:.6}", model.vocab.len(), trace.last().unwrap());
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_set() -> Vec<(&'static str, Label)> {
        vec![
            ("are you a robot", Label::Pos),
            ("are you human", Label::Pos),
            ("am i talking to a bot", Label::Pos),
            ("is this a real person", Label::Pos),
            ("you sound robotic", Label::Aic),
            ("you seem like a machine", Label::Aic),
            ("do you like robots", Label::Neg),
            ("what is the weather", Label::Neg),
            ("play some music", Label::Neg),
            ("tell me a joke", Label::Neg),
        ]
    }

    #[test]
    fn separable_toy_set_fits() {
        let train = toy_set();
        let m = train_bow_lr(&train, &BowLrParams::default(), 1).unwrap();
        for (t, y) in &train {
            assert_eq!(m.predict(t).label, *y, "{t}");
        }
        assert!(m.weights.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn deterministic() {
        let train = toy_set();
        let p = BowLrParams { epochs: 5, ..Default::default() };
        assert_eq!(train_bow_lr(&train, &p, 3).unwrap(), train_bow_lr(&train, &p, 3).unwrap());
    }

    #[test]
    fn loss_non_increasing_at_small_step() {
        let train = toy_set();
        let p = BowLrParams { learning_rate: 0.05, epochs: 30, batch_size: 3, shuffle: false, ..Default::default() };
        let (_, trace) = train_bow_lr_traced(&train, &p, 0).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let train = [("a", Label::Pos), ("b", Label::Aic)];
        assert_eq!(
            train_bow_lr(&train, &BowLrParams::default(), 0),
            Err(ClassifierError::MissingClass(Label::Neg))
        );
        let p = BowLrParams { batch_size: 0, ..Default::default() };
        assert!(matches!(train_bow_lr(&toy_set(), &p, 0), Err(ClassifierError::InvalidParams(_))));
    }
}
