//! Negative mining from unlabeled dialog corpora.
//!
//! Random mining draws uniformly. TF-IDF mining scores every corpus
//! utterance by its similarity to the positive examples and samples without
//! replacement in proportion to that score, surfacing hard negatives that
//! share words with the intent.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::tfidf::{TfIdfVector, Vocabulary};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiningMethod {
    Random,
    TfidfWeighted,
}

/// How similarities to the individual positives combine into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Max,
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MiningError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no positive examples to score against")]
    NoPositives,
    #[error("asked for {requested} utterances from a corpus of {available}")]
    TooMany { requested: usize, available: usize },
    #[error("only {available} utterances have a non-zero score; {requested} requested")]
    NotEnoughCandidates { requested: usize, available: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub text: String,
    pub source: String,
}

/// Reads a one-utterance-per-line export. Blank lines are skipped and the
/// file stem becomes the source tag.
pub fn read_corpus(path: &Path) -> std::io::Result<Vec<CorpusEntry>> {
    let source = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "corpus".into());
    Ok(fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| CorpusEntry { text: l.to_string(), source: source.clone() })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinedUtterance {
    pub text: String,
    pub source: String,
    /// Present only for TF-IDF mining.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinedNegatives {
    pub method: MiningMethod,
    /// In sampling order.
    pub utterances: Vec<MinedUtterance>,
}

/// Similarity of every corpus utterance to the positives. Vocabulary is
/// fitted on corpus and positives together.
pub fn tfidf_scores(corpus: &[CorpusEntry], positives: &[&str], agg: Aggregation) -> Vec<f64> {
    let vocab = Vocabulary::fit(corpus.iter().map(|c| c.text.as_str()).chain(positives.iter().copied()))
        .expect("non-empty by construction");
    let pos: Vec<TfIdfVector> = positives.iter().map(|p| vocab.vectorize(p)).collect();
    let mut postings: HashMap<u32, Vec<(usize, f64)>> = HashMap::new();
    for (j, v) in pos.iter().enumerate() {
        for &(i, w) in &v.entries {
            postings.entry(i).or_default().push((j, w));
        }
    }
    corpus
        .par_iter()
        .map(|c| {
            let v = vocab.vectorize(&c.text);
            // vectors are unit-norm or zero, so the dot product is the cosine
            let mut dots: HashMap<usize, f64> = HashMap::new();
            for &(i, w) in &v.entries {
                for &(j, pw) in postings.get(&i).map(Vec::as_slice).unwrap_or(&[]) {
                    *dots.entry(j).or_insert(0.0) += w * pw;
                }
            }
            let s = match agg {
                Aggregation::Max => dots.values().copied().fold(0.0, f64::max),
                Aggregation::Sum => dots.values().sum(),
                Aggregation::Mean => dots.values().sum::<f64>() / pos.len() as f64,
            };
            s.max(0.0)
        })
        .collect()
}

/// Weighted sampling without replacement: each item gets the key
/// `-ln(u) / w` and the `n` smallest keys win. Zero-weight items are never
/// chosen. Returns indices in selection order.
pub fn weighted_sample_without_replacement<R: Rng>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            // draw for every item so the stream does not depend on the weights
            let u: f64 = 1.0 - rng.random::<f64>();
            let key = if w > 0.0 { -u.ln() / w } else { f64::INFINITY };
            (key, i)
        })
        .filter(|(k, _)| k.is_finite())
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().take(n).map(|(_, i)| i).collect()
}

pub fn mine_negatives(
    corpus: &[CorpusEntry],
    positives: &[&str],
    n: usize,
    method: MiningMethod,
    seed: u64,
) -> Result<MinedNegatives, MiningError> {
    mine_negatives_with(corpus, positives, n, method, Aggregation::Max, seed)
}

pub fn mine_negatives_with(
    corpus: &[CorpusEntry],
    positives: &[&str],
    n: usize,
    method: MiningMethod,
    agg: Aggregation,
    seed: u64,
) -> Result<MinedNegatives, MiningError> {
    if corpus.is_empty() {
        return Err(MiningError::EmptyCorpus);
    }
    if n > corpus.len() {
        return Err(MiningError::TooMany { requested: n, available: corpus.len() });
    }
    let mut rng = seed::named_rng(seed, "mine");
    let utterances = match method {
        MiningMethod::Random => rand::seq::index::sample(&mut rng, corpus.len(), n)
            .into_iter()
            .map(|i| MinedUtterance { text: corpus[i].text.clone(), source: corpus[i].source.clone(), score: None })
            .collect(),
        MiningMethod::TfidfWeighted => {
            if positives.is_empty() {
                return Err(MiningError::NoPositives);
            }
            let scores = tfidf_scores(corpus, positives, agg);
            let available = scores.iter().filter(|&&s| s > 0.0).count();
            if available < n {
                return Err(MiningError::NotEnoughCandidates { requested: n, available });
            }
            weighted_sample_without_replacement(&scores, n, &mut rng)
                .into_iter()
                .map(|i| MinedUtterance {
                    text: corpus[i].text.clone(),
                    source: corpus[i].source.clone(),
                    score: Some(scores[i]),
                })
                .collect()
        }
    };
    Ok(MinedNegatives { method, utterances })
}
