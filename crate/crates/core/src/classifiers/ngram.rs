//! FastText-style classifier: hashed word n-grams, a learned embedding table,
//! mean pooling and a softmax head.
//!
//! The embedding table has `buckets` rows but only rows touched during
//! training are stored. Every other row keeps its initial value, which is a
//! pure function of the model's seed and the bucket index, so a model file
//! stays proportional to the training data rather than to `buckets * dim`.

use std::borrow::Cow;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_classes, softmax, ClassifierError, Example, IntentClassifier, Prediction};
use crate::label::Label;
use crate::seed;
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramParams {
    /// Word n-grams of length `1..=ngram_max` are used.
    pub ngram_max: usize,
    pub buckets: u32,
    pub dim: usize,
    pub epochs: usize,
    /// Initial step size, decayed linearly to zero over training.
    pub learning_rate: f64,
    /// L2 penalty on the output layer.
    pub l2: f64,
}

impl Default for NgramParams {
    fn default() -> Self {
        NgramParams { ngram_max: 3, buckets: 2_000_000, dim: 300, epochs: 10, learning_rate: 0.5, l2: 0.0 }
    }
}

impl NgramParams {
    fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidParams(m.to_string()));
        if self.ngram_max == 0 || self.buckets == 0 || self.dim == 0 {
            return bad("ngram_max, buckets and dim must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad("l2 must be non-negative");
        }
        Ok(())
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the n-gram's tokens joined by single spaces.
fn hash_ngram(tokens: &[String]) -> u64 {
    let mut h = FNV_OFFSET;
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            h = (h ^ u64::from(b' ')).wrapping_mul(FNV_PRIME);
        }
        for b in t.bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Bucket indices for every word n-gram, with repeats.
pub fn ngram_features(text: &str, ngram_max: usize, buckets: u32) -> Vec<u32> {
    let tokens = tokenize(text);
    let mut out = Vec::new();
    for n in 1..=ngram_max {
        for w in tokens.windows(n) {
            out.push((hash_ngram(w) % u64::from(buckets)) as u32);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramModel {
    pub params: NgramParams,
    /// Seed for the initial value of every embedding row.
    pub init_seed: u64,
    /// Rows that differ from their initial value.
    pub embeddings: BTreeMap<u32, Vec<f64>>,
    /// Class-major `3 x dim` output matrix.
    pub head: Vec<f64>,
    pub biases: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramGradient {
    pub head: Vec<f64>,
    pub biases: [f64; 3],
    pub rows: BTreeMap<u32, Vec<f64>>,
}

struct Forward {
    hidden: Vec<f64>,
    probs: [f64; 3],
}

impl NgramModel {
    pub fn new(params: NgramParams, seed: u64) -> Self {
        let head = vec![0.0; 3 * params.dim];
        NgramModel { init_seed: seed::derive(seed, "ngram/init"), params, embeddings: BTreeMap::new(), head, biases: [0.0; 3] }
    }

    fn initial_row(&self, bucket: u32) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.init_seed ^ u64::from(bucket).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let r = 1.0 / self.params.dim as f64;
        (0..self.params.dim).map(|_| rng.random_range(-r..r)).collect()
    }

    pub fn row(&self, bucket: u32) -> Cow<'_, [f64]> {
        match self.embeddings.get(&bucket) {
            Some(v) => Cow::Borrowed(v),
            None => Cow::Owned(self.initial_row(bucket)),
        }
    }

    /// Stores a row so it can be modified in place.
    pub fn materialize(&mut self, bucket: u32) -> &mut Vec<f64> {
        if !self.embeddings.contains_key(&bucket) {
            let row = self.initial_row(bucket);
            self.embeddings.insert(bucket, row);
        }
        self.embeddings.get_mut(&bucket).unwrap()
    }

    pub fn features(&self, text: &str) -> Vec<u32> {
        ngram_features(text, self.params.ngram_max, self.params.buckets)
    }

    fn forward(&self, feats: &[u32]) -> Forward {
        let dim = self.params.dim;
        let mut hidden = vec![0.0; dim];
        for &b in feats {
            hidden.iter_mut().zip(self.row(b).iter()).for_each(|(h, r)| *h += r);
        }
        if !feats.is_empty() {
            let k = feats.len() as f64;
            hidden.iter_mut().for_each(|h| *h /= k);
        }
        let mut z = self.biases;
        for (c, zc) in z.iter_mut().enumerate() {
            *zc += self.head[c * dim..(c + 1) * dim].iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
        }
        Forward { hidden, probs: softmax(z) }
    }

    pub fn probabilities(&self, text: &str) -> [f64; 3] {
        self.forward(&self.features(text)).probs
    }

    /// Mean cross-entropy over `batch` (feature lists with labels) plus
    /// `l2 / 2 * |head|^2`, and its gradient. Row gradients cover every
    /// bucket that appears in the batch.
    pub fn loss_and_gradient(&self, batch: &[(Vec<u32>, Label)]) -> (f64, NgramGradient) {
        let dim = self.params.dim;
        let scale = 1.0 / batch.len() as f64;
        let mut g = NgramGradient {
            head: self.head.iter().map(|w| self.params.l2 * w).collect(),
            biases: [0.0; 3],
            rows: BTreeMap::new(),
        };
        let mut ce = 0.0;
        for (feats, y) in batch {
            let f = self.forward(feats);
            ce -= f.probs[y.index()].ln();
            let dz = dz(&f.probs, *y).map(|d| d * scale);
            let dh = self.hidden_grad(&dz);
            for c in 0..3 {
                g.biases[c] += dz[c];
                for (gw, h) in g.head[c * dim..(c + 1) * dim].iter_mut().zip(&f.hidden) {
                    *gw += dz[c] * h;
                }
            }
            let k = feats.len() as f64;
            for &b in feats {
                let row = g.rows.entry(b).or_insert_with(|| vec![0.0; dim]);
                row.iter_mut().zip(&dh).for_each(|(r, d)| *r += d / k);
            }
        }
        let penalty = 0.5 * self.params.l2 * self.head.iter().map(|w| w * w).sum::<f64>();
        (ce * scale + penalty, g)
    }

    fn hidden_grad(&self, dz: &[f64; 3]) -> Vec<f64> {
        let dim = self.params.dim;
        (0..dim).map(|j| (0..3).map(|c| self.head[c * dim + j] * dz[c]).sum()).collect()
    }

    /// One stochastic gradient step on a single example.
    fn sgd_step(&mut self, feats: &[u32], y: Label, lr: f64) {
        let dim = self.params.dim;
        let f = self.forward(feats);
        let dz = dz(&f.probs, y);
        let dh = self.hidden_grad(&dz);
        for c in 0..3 {
            self.biases[c] -= lr * dz[c];
            for (w, h) in self.head[c * dim..(c + 1) * dim].iter_mut().zip(&f.hidden) {
                *w -= lr * (dz[c] * h + self.params.l2 * *w);
            }
        }
        if feats.is_empty() {
            return;
        }
        let k = feats.len() as f64;
        for &b in feats {
            let row = self.materialize(b);
            row.iter_mut().zip(&dh).for_each(|(r, d)| *r -= lr * d / k);
        }
    }
}

fn dz(p: &[f64; 3], y: Label) -> [f64; 3] {
    let mut d = *p;
    d[y.index()] -= 1.0;
    d
}

impl IntentClassifier for NgramModel {
    fn id(&self) -> &str {
        "ngram"
    }

    fn predict(&self, text: &str) -> Prediction {
        Prediction::from_scores(text, self.probabilities(text))
    }
}

/// Trains with per-example SGD and a linearly decaying step size.
/// Deterministic given `seed`.
pub fn train_ngram_linear<E: Example>(
    train: &[E],
    params: &NgramParams,
    seed: u64,
) -> Result<NgramModel, ClassifierError> {
    params.validate()?;
    check_classes(train)?;
    let data: Vec<(Vec<u32>, Label)> = train
        .iter()
        .map(|e| (ngram_features(e.text(), params.ngram_max, params.buckets), e.label()))
        .collect();
    let mut model = NgramModel::new(params.clone(), seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = seed::named_rng(seed, "ngram/shuffle");
    let total = (params.epochs * data.len()) as f64;
    let mut done = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let lr = params.learning_rate * (1.0 - done as f64 / total);
            model.sgd_step(&data[i].0, data[i].1, lr);
            done += 1;
        }
    }
    log::debug!("ngram: {} embedding rows stored", model.embeddings.len());
    Ok(model)
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
    fn default_hyperparameters() {
        let p = NgramParams::default();
        assert_eq!((p.ngram_max, p.dim, p.epochs, p.buckets), (3, 300, 10, 2_000_000));
    }

    #[test]
    fn features_cover_all_orders() {
        // 4 tokens: 4 unigrams + 3 bigrams + 2 trigrams
        assert_eq!(ngram_features("are you a robot", 3, 1000).len(), 9);
        assert!(ngram_features("", 3, 1000).is_empty());
        assert_eq!(ngram_features("hi", 3, 7), ngram_features("HI", 3, 7));
    }

    #[test]
    fn fits_separable_toy_set() {
        let train = toy_set();
        // ten examples give too few steps at the default epoch count
        let p = NgramParams { epochs: 100, ..Default::default() };
        let m = train_ngram_linear(&train, &p, 2).unwrap();
        for (t, y) in &train {
            assert_eq!(m.predict(t).label, *y, "{t}");
        }
    }

    #[test]
    fn deterministic_and_lazy() {
        let train = toy_set();
        let p = NgramParams { dim: 16, buckets: 1 << 12, ..Default::default() };
        let a = train_ngram_linear(&train, &p, 9).unwrap();
        assert_eq!(a, train_ngram_linear(&train, &p, 9).unwrap());
        // an unseen bucket reads its deterministic initial row
        let unseen = (0..p.buckets).find(|b| !a.embeddings.contains_key(b)).unwrap();
        assert_eq!(a.row(unseen), a.row(unseen));
        assert!(a.row(unseen).iter().all(|v| v.abs() <= 1.0 / 16.0));
    }

    #[test]
    fn missing_class() {
        let train = [("a", Label::Pos), ("b", Label::Neg)];
        assert_eq!(
            train_ngram_linear(&train, &NgramParams::default(), 0),
            Err(ClassifierError::MissingClass(Label::Aic))
        );
    }
}
