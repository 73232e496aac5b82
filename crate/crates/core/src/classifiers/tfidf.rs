//! Smoothed TF-IDF features over [`tokenize`](crate::text::tokenize) tokens.

use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::text::tokenize;

/// Token table with document frequencies. Indices follow first appearance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: IndexMap<String, u32>,
    doc_count: u32,
}

impl Vocabulary {
    pub fn fit<'a, I>(docs: I) -> Result<Self, ClassifierError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut terms: IndexMap<String, u32> = IndexMap::new();
        let mut doc_count = 0u32;
        for doc in docs {
            doc_count += 1;
            let mut seen = std::collections::HashSet::new();
            for t in tokenize(doc) {
                if seen.insert(t.clone()) {
                    *terms.entry(t).or_insert(0) += 1;
                }
            }
        }
        if doc_count == 0 {
            return Err(ClassifierError::EmptyCorpus);
        }
        Ok(Vocabulary { terms, doc_count })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Structural checks for vocabularies read from untrusted files.
    pub(crate) fn is_consistent(&self) -> bool {
        self.doc_count > 0 && self.terms.values().all(|&df| df >= 1 && df <= self.doc_count)
    }

    pub fn doc_count(&self) -> u32 {
        self.doc_count
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.terms.get_index_of(token)
    }

    pub fn df(&self, token: &str) -> Option<u32> {
        self.terms.get(token).copied()
    }

    /// `ln((1 + N) / (1 + df)) + 1`, or `None` for unknown tokens.
    pub fn idf(&self, token: &str) -> Option<f64> {
        self.df(token).map(|df| idf(self.doc_count, df))
    }

    /// Count-times-idf weights, L2-normalized. Unknown tokens are ignored;
    /// an utterance with no known tokens maps to the zero vector.
    pub fn vectorize(&self, text: &str) -> TfIdfVector {
        let mut counts: HashMap<usize, u32> = HashMap::new();
        for t in tokenize(text) {
            if let Some(i) = self.terms.get_index_of(&t) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(i, c)| (i as u32, c as f64 * idf(self.doc_count, self.terms[i])))
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        if norm > 0.0 {
            entries.iter_mut().for_each(|e| e.1 /= norm);
        }
        TfIdfVector { entries }
    }
}

fn idf(n: u32, df: u32) -> f64 {
    ((1.0 + n as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Sparse vector with entries sorted by feature index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TfIdfVector {
    pub entries: Vec<(u32, f64)>,
}

impl TfIdfVector {
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &TfIdfVector) -> f64 {
        let (mut i, mut j, mut s) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    s += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        s
    }

    /// Squared Euclidean distance computed by merging the two index lists,
    /// so identical vectors are exactly zero apart.
    pub fn sq_distance(&self, other: &TfIdfVector) -> f64 {
        let (mut i, mut j, mut s) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() || j < b.len() {
            let d = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.0 == y.0 => {
                    i += 1;
                    j += 1;
                    x.1 - y.1
                }
                (Some(x), Some(y)) if x.0 < y.0 => {
                    i += 1;
                    x.1
                }
                (Some(x), None) => {
                    i += 1;
                    x.1
                }
                (_, Some(y)) => {
                    j += 1;
                    y.1
                }
                (None, None) => unreachable!(),
            };
            s += d * d;
        }
        s
    }

    /// Cosine similarity; zero if either side is the zero vector.
    pub fn cosine(&self, other: &TfIdfVector) -> f64 {
        let d = self.norm() * other.norm();
        if d == 0.0 {
            0.0
        } else {
            self.dot(other) / d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(n: usize, rare: bool) -> Vec<String> {
        (0..n).map(|i| if rare && i == 0 { "common rare".into() } else { "common".into() }).collect()
    }

    #[test]
    fn idf_values() {
        let d = docs(100, true);
        let v = Vocabulary::fit(d.iter().map(String::as_str)).unwrap();
        assert_eq!(v.idf("common"), Some(1.0));
        // ln(101 / 2) + 1
        assert!((v.idf("rare").unwrap() - 4.921_973_336_281_314).abs() < 1e-12);
        assert_eq!(v.idf("unseen"), None);
    }

    #[test]
    fn empty_corpus() {
        assert_eq!(Vocabulary::fit(std::iter::empty()), Err(ClassifierError::EmptyCorpus));
    }

    #[test]
    fn vectorize_contract() {
        let v = Vocabulary::fit(["are you a robot?", "do you like robots?"]).unwrap();
        assert_eq!(v.index("are"), Some(0));
        assert_eq!(v.df("you"), Some(2));
        let one = v.vectorize("robot");
        assert_eq!(one.entries, vec![(v.index("robot").unwrap() as u32, 1.0)]);
        assert!(v.vectorize("zzz qqq").is_zero());
        let x = v.vectorize("Are you a robot? robot robot");
        assert!((x.norm() - 1.0).abs() < 1e-12);
        assert_eq!(x.sq_distance(&x.clone()), 0.0);
        assert!((x.cosine(&x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_matches_dense() {
        let a = TfIdfVector { entries: vec![(0, 0.6), (3, 0.8)] };
        let b = TfIdfVector { entries: vec![(1, 1.0), (3, 0.5)] };
        let dense = 0.36 + 1.0 + 0.09;
        assert!((a.sq_distance(&b) - dense).abs() < 1e-12);
        assert!((b.sq_distance(&a) - dense).abs() < 1e-12);
        assert_eq!(a.dot(&b), 0.4);
        assert_eq!(a.sq_distance(&TfIdfVector::default()), 1.0);
    }
}
