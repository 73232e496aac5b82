//! Central finite-difference checks of the linear models' analytic
//! gradients.

use super::logistic::BowLrModel;
use super::ngram::NgramModel;
use super::tfidf::TfIdfVector;
use crate::label::Label;

/// Denominator floor, so parameters with a near-zero gradient are compared
/// in absolute terms.
pub const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn central(h: f64, mut loss_at: impl FnMut(f64) -> f64) -> f64 {
    (loss_at(h) - loss_at(-h)) / (2.0 * h)
}

/// Largest relative error over every weight and bias.
pub fn check_bow_lr(model: &BowLrModel, batch: &[(TfIdfVector, Label)], h: f64) -> f64 {
    let (_, g) = model.loss_and_gradient(batch);
    let mut m = model.clone();
    let mut worst: f64 = 0.0;
    for i in 0..model.weights.len() {
        let numeric = central(h, |d| {
            m.weights[i] = model.weights[i] + d;
            m.loss(batch)
        });
        m.weights[i] = model.weights[i];
        worst = worst.max(relative_error(g.weights[i], numeric));
    }
    for c in 0..3 {
        let numeric = central(h, |d| {
            m.biases[c] = model.biases[c] + d;
            m.loss(batch)
        });
        m.biases[c] = model.biases[c];
        worst = worst.max(relative_error(g.biases[c], numeric));
    }
    worst
}

/// Largest relative error over the head, the biases and every embedding row
/// the batch touches.
pub fn check_ngram(model: &NgramModel, batch: &[(Vec<u32>, Label)], h: f64) -> f64 {
    let (_, g) = model.loss_and_gradient(batch);
    let loss = |m: &NgramModel| m.loss_and_gradient(batch).0;
    let mut m = model.clone();
    let mut worst: f64 = 0.0;
    for i in 0..model.head.len() {
        let numeric = central(h, |d| {
            m.head[i] = model.head[i] + d;
            loss(&m)
        });
        m.head[i] = model.head[i];
        worst = worst.max(relative_error(g.head[i], numeric));
    }
    for c in 0..3 {
        let numeric = central(h, |d| {
            m.biases[c] = model.biases[c] + d;
            loss(&m)
        });
        m.biases[c] = model.biases[c];
        worst = worst.max(relative_error(g.biases[c], numeric));
    }
    for (&bucket, grad_row) in &g.rows {
        let original = model.row(bucket).into_owned();
        for (j, &analytic) in grad_row.iter().enumerate() {
            let numeric = central(h, |d| {
                m.materialize(bucket)[j] = original[j] + d;
                loss(&m)
            });
            m.materialize(bucket)[j] = original[j];
            worst = worst.max(relative_error(analytic, numeric));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::classifiers::logistic::BowLrParams;
    use crate::classifiers::ngram::NgramParams;
    use crate::classifiers::tfidf::Vocabulary;
    use crate::seed;

    const TEXTS: [&str; 5] = ["are you a robot", "you sound robotic", "do you like robots", "is this a person", "play music"];
    const LABELS: [Label; 5] = [Label::Pos, Label::Aic, Label::Neg, Label::Pos, Label::Neg];

    #[test]
    fn bow_lr_gradient() {
        let vocab = Vocabulary::fit(TEXTS).unwrap();
        let batch: Vec<_> = TEXTS.iter().zip(LABELS).map(|(t, y)| (vocab.vectorize(t), y)).collect();
        let mut rng = seed::rng(3);
        let weights = (0..3 * vocab.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = BowLrModel { vocab, weights, biases: [0.1, -0.2, 0.05], params: BowLrParams::default() };
        assert!(check_bow_lr(&m, &batch, 1e-5) <= 1e-4);
    }

    #[test]
    fn ngram_gradient() {
        let params = NgramParams { dim: 6, buckets: 97, l2: 1e-3, ..Default::default() };
        let mut m = NgramModel::new(params, 4);
        let mut rng = seed::rng(4);
        m.head.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
        let batch: Vec<_> = TEXTS.iter().zip(LABELS).map(|(t, y)| (m.features(t), y)).collect();
        assert!(check_ngram(&m, &batch, 1e-5) <= 1e-4);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        assert!(relative_error(1.0, 1.01) > 1e-4);
        assert_eq!(relative_error(0.0, 1e-12), 1e-6);
    }
}
