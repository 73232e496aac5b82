//! Guess a label at random, weighted by the training label distribution.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use super::{ClassifierError, Example, IntentClassifier, Prediction};
use crate::label::Label;
use crate::seed;

/// `n` i.i.d. labels drawn from `distribution` (POS, AIC, NEG order).
pub fn predict_random(distribution: [f64; 3], seed: u64, n: usize) -> Result<Vec<Label>, ClassifierError> {
    let dist = WeightedIndex::new(distribution)
        .map_err(|e| ClassifierError::InvalidParams(format!("label distribution: {e}")))?;
    let mut rng = seed::rng(seed);
    Ok((0..n).map(|_| Label::ALL[dist.sample(&mut rng)]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomGuess {
    pub distribution: [f64; 3],
    pub seed: u64,
}

impl RandomGuess {
    pub fn new(distribution: [f64; 3], seed: u64) -> Result<Self, ClassifierError> {
        predict_random(distribution, seed, 0)?;
        Ok(RandomGuess { distribution, seed })
    }

    /// Uses the empirical label frequencies of `train`.
    pub fn train<E: Example>(train: &[E], seed: u64) -> Result<Self, ClassifierError> {
        if train.is_empty() {
            return Err(ClassifierError::EmptyCorpus);
        }
        let mut counts = [0.0; 3];
        for e in train {
            counts[e.label().index()] += 1.0;
        }
        let n = train.len() as f64;
        RandomGuess::new(counts.map(|c| c / n), seed)
    }
}

impl IntentClassifier for RandomGuess {
    fn id(&self) -> &str {
        "random"
    }

    /// A guess seeded by the text, so repeated calls agree and a batch is
    /// independent of its order.
    fn predict(&self, text: &str) -> Prediction {
        let label = predict_random(self.distribution, seed::derive(self.seed, text), 1).expect("validated")[0];
        let mut scores = [0.0; 3];
        scores[label.index()] = 1.0;
        Prediction { text: text.to_string(), label, scores }
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_distribution() {
        assert!(predict_random([1.0, 0.0, 0.0], 4, 500).unwrap().iter().all(|&l| l == Label::Pos));
    }

    #[test]
    fn same_seed_same_sequence() {
        let d = [0.4, 0.1, 0.5];
        assert_eq!(predict_random(d, 8, 10_000).unwrap(), predict_random(d, 8, 10_000).unwrap());
        assert_ne!(predict_random(d, 8, 100).unwrap(), predict_random(d, 9, 100).unwrap());
    }

    #[test]
    fn rejects_invalid_distribution() {
        assert!(predict_random([0.0, 0.0, 0.0], 0, 1).is_err());
        assert!(RandomGuess::new([-1.0, 1.0, 1.0], 0).is_err());
    }

    #[test]
    fn guesses_follow_the_text() {
        let m = RandomGuess::new([0.4, 0.1, 0.5], 3).unwrap();
        let texts: Vec<String> = (0..2000).map(|i| format!("utterance {i}")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let batch = m.predict_batch(&refs);
        assert!(batch.iter().zip(&refs).all(|(p, t)| p.label == m.predict(t).label));
        let pos = batch.iter().filter(|p| p.label == Label::Pos).count() as f64 / 2000.0;
        assert!((pos - 0.4).abs() < 0.04, "{pos}");
    }

    #[test]
    fn trained_frequencies() {
        let train = [("a", Label::Pos), ("b", Label::Pos), ("c", Label::Neg), ("d", Label::Neg)];
        assert_eq!(RandomGuess::train(&train, 0).unwrap().distribution, [0.5, 0.0, 0.5]);
    }
}
