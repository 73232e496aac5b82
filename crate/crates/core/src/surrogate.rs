//! Builds a labeled dataset entirely from grammars: POS and AIC rows from
//! partitioned intent grammars, NEG rows from a negative grammar plus
//! negatives mined from a small-talk corpus.

use std::collections::HashSet;

use rand::seq::SliceRandom;

use crate::dataset::{Dataset, LabeledUtterance};
use crate::evaluation::mining::{mine_negatives, CorpusEntry, MiningError, MiningMethod};
use crate::generation::{default_max_attempts, sample, GenerationError};
use crate::grammar::Grammar;
use crate::label::{GrammarSplit, Label};
use crate::partition::{emit_split_datasets, partition, PartitionConfig, PartitionError, PartitionedGrammar};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    pub total: usize,
    pub split_fractions: [f64; 3],
    /// POS, AIC and NEG shares of every split.
    pub label_mix: [f64; 3],
    /// Share of NEG rows mined from the corpus rather than generated.
    pub mined_fraction: f64,
    /// Share of mined rows chosen by TF-IDF similarity; the rest are random.
    pub tfidf_fraction: f64,
    /// Number of distinct small-talk utterances in the mining corpus.
    pub corpus_size: usize,
    /// Partition settings shared by the three labeled grammars. Its seed is
    /// replaced by one derived from `seed`.
    pub partition: PartitionConfig,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            total: 3000,
            split_fractions: [0.70, 0.15, 0.15],
            label_mix: [0.40, 0.10, 0.50],
            mined_fraction: 0.5,
            tfidf_fraction: 2.0 / 3.0,
            corpus_size: 2000,
            partition: PartitionConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SurrogateError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("corpus: {0}")]
    Corpus(#[from] GenerationError),
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error("invalid surrogate config: {0}")]
    InvalidConfig(String),
}

/// The grammars a surrogate is drawn from.
pub struct SurrogateGrammars<'a> {
    pub pos: &'a Grammar,
    pub aic: &'a Grammar,
    pub neg: &'a Grammar,
    pub chitchat: &'a Grammar,
}

pub struct Surrogate {
    pub dataset: Dataset,
    /// Partitions of the POS, AIC and NEG grammars, in that order.
    pub partitions: [PartitionedGrammar; 3],
}

fn share(n: usize, f: f64) -> usize {
    (n as f64 * f).round() as usize
}

pub fn build_surrogate(g: &SurrogateGrammars<'_>, cfg: &SurrogateConfig) -> Result<Surrogate, SurrogateError> {
    let bad = |m: &str| Err(SurrogateError::InvalidConfig(m.to_string()));
    if cfg.total == 0 {
        return bad("total must be at least 1");
    }
    if !(0.0..=1.0).contains(&cfg.mined_fraction) || !(0.0..=1.0).contains(&cfg.tfidf_fraction) {
        return bad("mined_fraction and tfidf_fraction must lie in [0, 1]");
    }
    let split_n: Vec<usize> = cfg.split_fractions.iter().map(|&f| share(cfg.total, f)).collect();
    // counts[label][split]
    let counts: Vec<[usize; 3]> =
        cfg.label_mix.iter().map(|&m| [0, 1, 2].map(|s| share(split_n[s], m))).collect();
    let mined: [usize; 3] = [0, 1, 2].map(|s| share(counts[2][s], cfg.mined_fraction));
    let neg_generated: [usize; 3] = [0, 1, 2].map(|s| counts[2][s] - mined[s]);

    let mut pcfg = cfg.partition.clone();
    pcfg.seed = seed::derive(cfg.seed, "surrogate/partition");
    let mut rows: Vec<LabeledUtterance> = Vec::new();
    let mut partitions = Vec::new();
    for (label, grammar, n) in [
        (Label::Pos, g.pos, counts[0]),
        (Label::Aic, g.aic, counts[1]),
        (Label::Neg, g.neg, neg_generated),
    ] {
        let pg = partition(grammar, &pcfg)?;
        let name = format!("surrogate/{}", label.code());
        if n.iter().all(|&k| k > 0) {
            for s in emit_split_datasets(&pg, n, seed::derive(cfg.seed, &name))? {
                rows.extend(s.batch.utterances.into_iter().map(|t| LabeledUtterance::new(t, label, s.split.into(), "grammar")));
            }
        } else {
            for split in GrammarSplit::ALL.into_iter().filter(|s| n[s.index()] > 0) {
                let k = n[split.index()];
                let b = sample(pg.grammar(split), k, seed::derive(cfg.seed, &format!("{name}/{split}")), true, default_max_attempts(k))
                    .map_err(|source| PartitionError::Generation { split, source })?;
                rows.extend(b.utterances.into_iter().map(|t| LabeledUtterance::new(t, label, split.into(), "grammar")));
            }
        }
        partitions.push(pg);
    }

    let total_mined: usize = mined.iter().sum();
    if total_mined > 0 {
        let taken: HashSet<&str> = rows.iter().map(|r| r.text.as_str()).collect();
        let corpus: Vec<CorpusEntry> = sample(
            g.chitchat,
            cfg.corpus_size,
            seed::derive(cfg.seed, "surrogate/corpus"),
            true,
            default_max_attempts(cfg.corpus_size),
        )?
        .utterances
        .into_iter()
        .filter(|t| !taken.contains(t.as_str()))
        .map(|text| CorpusEntry { text, source: "chitchat".into() })
        .collect();
        let positives: Vec<&str> =
            rows.iter().filter(|r| r.label == Label::Pos && r.split == GrammarSplit::Train.into()).map(|r| r.text.as_str()).collect();
        let n_tfidf = share(total_mined, cfg.tfidf_fraction);
        let by_tfidf = mine_negatives(&corpus, &positives, n_tfidf, MiningMethod::TfidfWeighted, seed::derive(cfg.seed, "surrogate/tfidf"))?;
        let picked: HashSet<&str> = by_tfidf.utterances.iter().map(|u| u.text.as_str()).collect();
        let rest: Vec<CorpusEntry> = corpus.iter().filter(|c| !picked.contains(c.text.as_str())).cloned().collect();
        let by_random = mine_negatives(&rest, &[], total_mined - n_tfidf, MiningMethod::Random, seed::derive(cfg.seed, "surrogate/random"))?;
        let mut pool: Vec<_> = by_tfidf.utterances.into_iter().chain(by_random.utterances).collect();
        pool.shuffle(&mut seed::named_rng(cfg.seed, "surrogate/mined"));
        let mut it = pool.into_iter();
        for split in GrammarSplit::ALL {
            for u in it.by_ref().take(mined[split.index()]) {
                rows.push(LabeledUtterance::new(u.text, Label::Neg, split.into(), u.source));
            }
        }
    }
    let partitions: [PartitionedGrammar; 3] = partitions.try_into().unwrap_or_else(|_| unreachable!());
    Ok(Surrogate { dataset: Dataset::new(rows), partitions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Split;
    use crate::shipped;

    #[test]
    fn shape_of_default_surrogate() {
        let [pos, aic, neg, chit] = ["pos", "aic", "neg", "chitchat"].map(|n| shipped::grammar(n).unwrap());
        let g = SurrogateGrammars { pos: &pos, aic: &aic, neg: &neg, chitchat: &chit };
        let s = build_surrogate(&g, &SurrogateConfig::default()).unwrap();
        let d = &s.dataset;
        assert_eq!(d.rows.len(), 3000);
        assert_eq!(d.split(Split::Train).count(), 2100);
        assert_eq!(d.split(Split::Test).count(), 450);
        assert_eq!(d.label_counts(), [1200, 300, 1500]);
        assert_eq!(d.rows.iter().filter(|r| r.source == "chitchat").count(), 751);
        let again = build_surrogate(&g, &SurrogateConfig::default()).unwrap();
        assert_eq!(again.dataset, s.dataset);
    }
}
