//! Probe recall: how many of a fixed set of distinct positive phrasings a
//! classifier detects.

use std::collections::HashSet;

use rand::seq::index;
use serde::Serialize;

use crate::classifiers::IntentClassifier;
use crate::generation::{default_max_attempts, Sampler};
use crate::grammar::Grammar;
use crate::label::Label;
use crate::seed;
use crate::text::{normalize, sentences};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Probe {
    pub text: String,
    /// `crowd` or `grammar`.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeVerdict {
    pub text: String,
    pub source: String,
    pub predicted: Label,
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub recall: f64,
    pub detected: usize,
    pub total: usize,
    pub verdicts: Vec<ProbeVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProbeError {
    #[error("probe set is empty")]
    Empty,
    #[error("only {available} eligible {origin} probes; {requested} requested")]
    NotEnough { origin: &'static str, requested: usize, available: usize },
}

/// Fraction of probes classified POS, with a per-probe verdict table.
pub fn probe_recall(model: &dyn IntentClassifier, probes: &[Probe]) -> Result<ProbeReport, ProbeError> {
    if probes.is_empty() {
        return Err(ProbeError::Empty);
    }
    let texts: Vec<&str> = probes.iter().map(|p| p.text.as_str()).collect();
    let verdicts: Vec<ProbeVerdict> = model
        .predict_batch(&texts)
        .into_iter()
        .zip(probes)
        .map(|(pred, p)| ProbeVerdict {
            text: p.text.clone(),
            source: p.source.clone(),
            predicted: pred.label,
            detected: pred.label == Label::Pos,
        })
        .collect();
    let detected = verdicts.iter().filter(|v| v.detected).count();
    Ok(ProbeReport { recall: detected as f64 / probes.len() as f64, detected, total: probes.len(), verdicts })
}

/// A probe must stand alone: one sentence, no leading context.
fn eligible(text: &str) -> Option<String> {
    let norm = normalize(text).ok()?;
    (sentences(&norm).len() == 1).then_some(norm)
}

/// `n` distinct probes: `n / 2` drawn from crowd-sourced positives and the
/// rest sampled from `grammar`. Multi-sentence utterances are excluded since
/// they carry extra context.
pub fn build_probe_set(crowd: &[&str], grammar: &Grammar, n: usize, seed: u64) -> Result<Vec<Probe>, ProbeError> {
    let n_crowd = n / 2;
    let n_grammar = n - n_crowd;
    let mut seen: HashSet<String> = HashSet::new();
    let mut pool: Vec<(&str, String)> = Vec::new();
    for &t in crowd {
        if let Some(norm) = eligible(t) {
            if seen.insert(norm.clone()) {
                pool.push((t, norm));
            }
        }
    }
    if pool.len() < n_crowd {
        return Err(ProbeError::NotEnough { origin: "crowd", requested: n_crowd, available: pool.len() });
    }
    let mut rng = seed::named_rng(seed, "probe/crowd");
    let mut picked: Vec<usize> = index::sample(&mut rng, pool.len(), n_crowd).into_vec();
    picked.sort_unstable();
    let mut probes: Vec<Probe> =
        picked.iter().map(|&i| Probe { text: pool[i].0.to_string(), source: "crowd".into() }).collect();
    let mut used: HashSet<String> = picked.iter().map(|&i| pool[i].1.clone()).collect();

    let mut sampler = Sampler::new(grammar, seed::derive(seed, "probe/grammar"));
    let mut found = 0;
    for _ in 0..default_max_attempts(n_grammar.max(1)) {
        if found == n_grammar {
            break;
        }
        let s = sampler.draw();
        if let Some(norm) = eligible(&s) {
            if used.insert(norm) {
                probes.push(Probe { text: s, source: "grammar".into() });
                found += 1;
            }
        }
    }
    if found < n_grammar {
        return Err(ProbeError::NotEnough { origin: "grammar", requested: n_grammar, available: found });
    }
    Ok(probes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recognizer::RecognizerModel;
    use crate::shipped::TOY;

    #[test]
    fn recognizer_detects_its_own_language() {
        let g: Grammar = TOY.parse().unwrap();
        let aic: Grammar = "S -> \"you sound robotic\"".parse().unwrap();
        let crowd = ["are you a robot", "That didn't make sense. Are you a robot?", "am i talking to a human"];
        let probes = build_probe_set(&crowd, &g, 4, 1).unwrap();
        assert_eq!(probes.len(), 4);
        assert_eq!(probes.iter().filter(|p| p.source == "crowd").count(), 2);
        assert!(probes.iter().all(|p| !p.text.contains("make sense")));
        let distinct: HashSet<String> = probes.iter().map(|p| normalize(&p.text).unwrap()).collect();
        assert_eq!(distinct.len(), 4);
        let m = RecognizerModel::new(&g, &aic, true);
        let r = probe_recall(&m, &probes).unwrap();
        assert_eq!(r.recall, 1.0);
    }

    #[test]
    fn recall_counts() {
        let g: Grammar = "S -> \"are you a robot\"".parse().unwrap();
        let aic: Grammar = "S -> \"x\"".parse().unwrap();
        let m = RecognizerModel::new(&g, &aic, false);
        let mut probes: Vec<Probe> = (0..85).map(|_| Probe { text: "are you a robot".into(), source: "crowd".into() }).collect();
        probes.extend((0..15).map(|i| Probe { text: format!("miss {i}"), source: "grammar".into() }));
        let r = probe_recall(&m, &probes).unwrap();
        assert_eq!((r.recall, r.detected, r.total), (0.85, 85, 100));
        assert_eq!(probe_recall(&m, &[]), Err(ProbeError::Empty));
    }

    #[test]
    fn too_few_crowd_probes() {
        let g: Grammar = TOY.parse().unwrap();
        assert!(matches!(
            build_probe_set(&["Hi. Are you a bot?"], &g, 4, 0),
            Err(ProbeError::NotEnough { origin: "crowd", .. })
        ));
    }
}
