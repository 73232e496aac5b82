//! Intra-rule partitioning of a grammar into train/val/test sub-grammars.
//!
//! Within each splittable rule the most probable alternatives are kept in
//! every split until their cumulative probability reaches `p`; each remaining
//! alternative is placed into exactly one split. Rare phrasings therefore
//! never leak from the held-out splits into training data.

use std::collections::HashSet;
use std::fmt::Write as _;

use indexmap::IndexMap;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::generation::{default_max_attempts, sample, GenerationError, SampleBatch};
use crate::grammar::{Grammar, GrammarError, Rule, Splittable};
use crate::label::GrammarSplit;
use crate::seed;

/// Slack used when comparing cumulative mass against `p`.
const MASS_EPSILON: f64 = 1e-12;

pub const MANIFEST_HEADER: &str = "rule\talt_index\tassignment";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PartitionError {
    #[error("invalid partition config: {0}")]
    InvalidConfig(String),
    #[error("the {0} sub-grammar lost its start symbol")]
    EmptySplitGrammar(GrammarSplit),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("{split} split: {source}")]
    Generation {
        split: GrammarSplit,
        #[source]
        source: GenerationError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionConfig {
    /// Probability mass duplicated into every split, in (0, 1).
    pub p: f64,
    /// Train, validation and test fractions for exclusive alternatives.
    pub split_fractions: [f64; 3],
    /// Rules with fewer alternatives are fully shared unless marked `@split`.
    pub min_alternatives_to_split: usize,
    pub seed: u64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig { p: 0.25, split_fractions: [0.70, 0.15, 0.15], min_alternatives_to_split: 4, seed: 0 }
    }
}

impl PartitionConfig {
    pub fn validate(&self) -> Result<(), PartitionError> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(PartitionError::InvalidConfig(format!("p = {} is outside (0, 1)", self.p)));
        }
        if self.split_fractions.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(PartitionError::InvalidConfig("split fractions must be positive".into()));
        }
        let sum: f64 = self.split_fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PartitionError::InvalidConfig(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assignment {
    Shared,
    Exclusive(GrammarSplit),
}

impl Assignment {
    pub fn as_str(self) -> &'static str {
        match self {
            Assignment::Shared => "shared",
            Assignment::Exclusive(s) => s.as_str(),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "shared" => Assignment::Shared,
            "train" => Assignment::Exclusive(GrammarSplit::Train),
            "val" => Assignment::Exclusive(GrammarSplit::Val),
            "test" => Assignment::Exclusive(GrammarSplit::Test),
            _ => return None,
        })
    }

    fn keeps(self, split: GrammarSplit) -> bool {
        match self {
            Assignment::Shared => true,
            Assignment::Exclusive(s) => s == split,
        }
    }
}

/// A grammar together with its per-alternative split assignment and the
/// three derived sub-grammars.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedGrammar {
    source: Grammar,
    assignments: IndexMap<String, Vec<Assignment>>,
    splits: [Grammar; 3],
}

/// Indices of the minimal highest-probability prefix reaching mass `p`.
/// Ties in probability keep the original rule order.
fn shared_prefix(probs: &[f64], p: f64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    let mut mass = 0.0;
    let mut k = 0;
    while k < order.len() && mass < p - MASS_EPSILON {
        mass += probs[order[k]];
        k += 1;
    }
    let rest = order.split_off(k);
    (order, rest)
}

fn is_splittable(rule: &Rule, min_alternatives: usize) -> bool {
    match rule.splittable {
        Splittable::Never => false,
        Splittable::Always => true,
        Splittable::Auto => rule.alternatives.len() >= min_alternatives,
    }
}

/// Partitions every splittable rule. Deterministic for a given config: each
/// rule draws from its own sub-seed, so editing one rule leaves the others'
/// assignments untouched.
pub fn partition(g: &Grammar, cfg: &PartitionConfig) -> Result<PartitionedGrammar, PartitionError> {
    cfg.validate()?;
    let split_choice = WeightedIndex::new(cfg.split_fractions).expect("validated fractions");
    let mut assignments = IndexMap::with_capacity(g.len());
    for rule in g.rules() {
        let mut assign = vec![Assignment::Shared; rule.alternatives.len()];
        if is_splittable(rule, cfg.min_alternatives_to_split) {
            let (_, exclusive) = shared_prefix(&rule.probabilities(), cfg.p);
            let mut rng = seed::named_rng(cfg.seed, &format!("partition/{}", rule.name));
            for i in exclusive {
                assign[i] = Assignment::Exclusive(GrammarSplit::ALL[split_choice.sample(&mut rng)]);
            }
        }
        assignments.insert(rule.name.clone(), assign);
    }
    PartitionedGrammar::from_assignments(g.clone(), assignments)
}

/// Keeps the alternatives assigned to `split`, then drops rules that became
/// empty, alternatives that reference them, and anything unreachable.
fn sub_grammar(
    g: &Grammar,
    assignments: &IndexMap<String, Vec<Assignment>>,
    split: GrammarSplit,
) -> Result<Grammar, PartitionError> {
    let mut rules: Vec<Rule> = g
        .rules()
        .map(|r| {
            let keep = &assignments[&r.name];
            let alternatives = r
                .alternatives
                .iter()
                .zip(keep)
                .filter(|(_, a)| a.keeps(split))
                .map(|(alt, _)| alt.clone())
                .collect();
            Rule { name: r.name.clone(), alternatives, splittable: r.splittable }
        })
        .collect();

    let mut dead: HashSet<String> = HashSet::new();
    loop {
        let mut changed = false;
        for rule in &mut rules {
            if dead.contains(&rule.name) {
                continue;
            }
            rule.alternatives.retain(|a| a.production.references().all(|n| !dead.contains(n)));
            if rule.alternatives.is_empty() {
                dead.insert(rule.name.clone());
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if dead.contains(g.start()) {
        return Err(PartitionError::EmptySplitGrammar(split));
    }
    rules.retain(|r| !dead.contains(&r.name));

    let mut reachable: HashSet<&str> = HashSet::from([g.start()]);
    let mut frontier = vec![g.start().to_string()];
    let by_name: IndexMap<&str, &Rule> = rules.iter().map(|r| (r.name.as_str(), r)).collect();
    while let Some(name) = frontier.pop() {
        for alt in &by_name[name.as_str()].alternatives {
            for r in alt.production.references() {
                if let Some((key, _)) = by_name.get_key_value(r) {
                    if reachable.insert(key) {
                        frontier.push(r.to_string());
                    }
                }
            }
        }
    }
    let reachable: HashSet<String> = reachable.into_iter().map(str::to_string).collect();
    rules.retain(|r| reachable.contains(&r.name));
    Ok(Grammar::new(g.start(), rules)?)
}

impl PartitionedGrammar {
    fn from_assignments(
        source: Grammar,
        assignments: IndexMap<String, Vec<Assignment>>,
    ) -> Result<Self, PartitionError> {
        let splits = [
            sub_grammar(&source, &assignments, GrammarSplit::Train)?,
            sub_grammar(&source, &assignments, GrammarSplit::Val)?,
            sub_grammar(&source, &assignments, GrammarSplit::Test)?,
        ];
        Ok(PartitionedGrammar { source, assignments, splits })
    }

    pub fn source(&self) -> &Grammar {
        &self.source
    }

    pub fn grammar(&self, split: GrammarSplit) -> &Grammar {
        &self.splits[split.index()]
    }

    pub fn assignments(&self, rule: &str) -> Option<&[Assignment]> {
        self.assignments.get(rule).map(Vec::as_slice)
    }

    /// Alternative indices duplicated into every split.
    pub fn shared(&self, rule: &str) -> Vec<usize> {
        self.indices(rule, |a| a == Assignment::Shared)
    }

    pub fn exclusive(&self, rule: &str, split: GrammarSplit) -> Vec<usize> {
        self.indices(rule, |a| a == Assignment::Exclusive(split))
    }

    fn indices(&self, rule: &str, pred: impl Fn(Assignment) -> bool) -> Vec<usize> {
        self.assignments
            .get(rule)
            .map(|v| v.iter().enumerate().filter(|(_, a)| pred(**a)).map(|(i, _)| i).collect())
            .unwrap_or_default()
    }

    /// TSV audit trail: `rule<TAB>alt_index<TAB>assignment` with a header.
    pub fn to_manifest(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for (rule, assign) in &self.assignments {
            for (i, a) in assign.iter().enumerate() {
                let _ = writeln!(out, "{rule}\t{i}\t{}", a.as_str());
            }
        }
        out
    }

    /// Rebuilds a partition from a manifest. Every alternative of every rule
    /// must be listed exactly once.
    pub fn from_manifest(g: &Grammar, manifest: &str) -> Result<Self, PartitionError> {
        let err = |line: usize, message: String| PartitionError::Manifest { line, message };
        let mut slots: IndexMap<String, Vec<Option<Assignment>>> =
            g.rules().map(|r| (r.name.clone(), vec![None; r.alternatives.len()])).collect();
        let mut lines = manifest.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == MANIFEST_HEADER => {}
            _ => return Err(err(1, format!("expected header {MANIFEST_HEADER:?}"))),
        }
        for (i, line) in lines {
            let n = i + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [rule, idx, assignment] = fields[..] else {
                return Err(err(n, format!("expected 3 fields, found {}", fields.len())));
            };
            let slot = slots.get_mut(rule).ok_or_else(|| err(n, format!("unknown rule {rule:?}")))?;
            let idx: usize = idx.parse().map_err(|_| err(n, format!("bad alternative index {idx:?}")))?;
            let cell = slot
                .get_mut(idx)
                .ok_or_else(|| err(n, format!("rule {rule:?} has no alternative {idx}")))?;
            if cell.is_some() {
                return Err(err(n, format!("{rule}:{idx} listed twice")));
            }
            let a = Assignment::parse(assignment)
                .ok_or_else(|| err(n, format!("unknown assignment {assignment:?}")))?;
            *cell = Some(a);
        }
        let mut assignments = IndexMap::with_capacity(slots.len());
        for (rule, cells) in slots {
            let mut v = Vec::with_capacity(cells.len());
            for (i, c) in cells.into_iter().enumerate() {
                v.push(c.ok_or_else(|| err(0, format!("missing entry for {rule}:{i}")))?);
            }
            assignments.insert(rule, v);
        }
        PartitionedGrammar::from_assignments(g.clone(), assignments)
    }
}

/// A deduplicated sample drawn from one split's sub-grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSample {
    pub split: GrammarSplit,
    pub batch: SampleBatch,
}

/// Samples each sub-grammar independently (deduplicated within a split).
pub fn emit_split_datasets(
    pg: &PartitionedGrammar,
    counts: [usize; 3],
    seed: u64,
) -> Result<[SplitSample; 3], PartitionError> {
    let draw = |split: GrammarSplit| {
        let n = counts[split.index()];
        let s = seed::derive(seed, &format!("emit/{split}"));
        sample(pg.grammar(split), n, s, true, default_max_attempts(n))
            .map(|batch| SplitSample { split, batch })
            .map_err(|source| PartitionError::Generation { split, source })
    };
    Ok([draw(GrammarSplit::Train)?, draw(GrammarSplit::Val)?, draw(GrammarSplit::Test)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_rule(n: usize) -> Grammar {
        let alts: Vec<String> = (0..n).map(|i| format!("\"w{i}\"")).collect();
        format!("S -> {}", alts.join(" | ")).parse().unwrap()
    }

    #[test]
    fn prefix_rule_example() {
        let (shared, rest) = shared_prefix(&[0.30, 0.25, 0.20, 0.15, 0.10], 0.25);
        assert_eq!(shared, vec![0]);
        assert_eq!(rest, vec![1, 2, 3, 4]);
        // exact hit counts as reaching p
        let (shared, _) = shared_prefix(&[0.1, 0.15, 0.75], 0.85);
        assert_eq!(shared, vec![2, 1]);
        // ties keep rule order
        let (shared, _) = shared_prefix(&[0.25; 4], 0.3);
        assert_eq!(shared, vec![0, 1]);
    }

    #[test]
    fn weighted_rule_partition() {
        let g: Grammar = r#"S -> 30: "a" | 25: "b" | 20: "c" | 15: "d" | 10: "e""#.parse().unwrap();
        let pg = partition(&g, &PartitionConfig::default()).unwrap();
        assert_eq!(pg.shared("S"), vec![0]);
        let excl: usize = GrammarSplit::ALL.iter().map(|&s| pg.exclusive("S", s).len()).sum();
        assert_eq!(excl, 4);
    }

    #[test]
    fn below_threshold_is_fully_shared() {
        let g = uniform_rule(2);
        let pg = partition(&g, &PartitionConfig::default()).unwrap();
        assert_eq!(pg.shared("S"), vec![0, 1]);
        let g: Grammar = "S @nosplit -> \"a\" | \"b\" | \"c\" | \"d\" | \"e\"".parse().unwrap();
        assert_eq!(partition(&g, &PartitionConfig::default()).unwrap().shared("S").len(), 5);
        let g: Grammar = "S @split -> \"a\" | \"b\" | \"c\"".parse().unwrap();
        assert_eq!(partition(&g, &PartitionConfig::default()).unwrap().shared("S"), vec![0]);
    }

    #[test]
    fn high_p_shares_everything() {
        let g = uniform_rule(4);
        let cfg = PartitionConfig { p: 0.99, ..Default::default() };
        assert_eq!(partition(&g, &cfg).unwrap().shared("S"), vec![0, 1, 2, 3]);
    }

    #[test]
    fn config_validation() {
        for p in [0.0, 1.0, -0.1, f64::NAN] {
            let cfg = PartitionConfig { p, ..Default::default() };
            assert!(cfg.validate().is_err(), "p={p}");
        }
        let cfg = PartitionConfig { split_fractions: [0.5, 0.3, 0.3], ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = PartitionConfig { split_fractions: [1.0, 0.0, 0.0], ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ten_uniform_alternatives_leak_nowhere() {
        let g = uniform_rule(10);
        let pg = partition(&g, &PartitionConfig { seed: 3, ..Default::default() }).unwrap();
        assert_eq!(pg.shared("S"), vec![0, 1, 2]);
        let langs: Vec<_> = GrammarSplit::ALL.iter().map(|&s| pg.grammar(s).language(100).unwrap()).collect();
        for i in 0..10 {
            let w = format!("w{i}");
            let n = langs.iter().filter(|l| l.contains(&w)).count();
            assert_eq!(n, if i < 3 { 3 } else { 1 }, "{w}");
        }
    }

    #[test]
    fn pruning_removes_dead_rules() {
        let g: Grammar = "S -> A | \"s\"\nA -> \"a\"".parse().unwrap();
        let mut a = IndexMap::new();
        a.insert("S".to_string(), vec![Assignment::Exclusive(GrammarSplit::Train), Assignment::Shared]);
        a.insert("A".to_string(), vec![Assignment::Shared]);
        let pg = PartitionedGrammar::from_assignments(g.clone(), a).unwrap();
        assert_eq!(pg.grammar(GrammarSplit::Train).len(), 2);
        assert_eq!(pg.grammar(GrammarSplit::Val).len(), 1);

        let mut a = IndexMap::new();
        a.insert("S".to_string(), vec![Assignment::Shared, Assignment::Shared]);
        a.insert("A".to_string(), vec![Assignment::Exclusive(GrammarSplit::Val)]);
        let pg = PartitionedGrammar::from_assignments(g.clone(), a).unwrap();
        assert!(pg.grammar(GrammarSplit::Train).rule("A").is_none());
        assert_eq!(pg.grammar(GrammarSplit::Train).enumerate(5).unwrap(), vec!["s".to_string()]);
        assert_eq!(pg.grammar(GrammarSplit::Val).language(5).unwrap().len(), 2);

        let mut a = IndexMap::new();
        a.insert("S".to_string(), vec![Assignment::Exclusive(GrammarSplit::Val), Assignment::Exclusive(GrammarSplit::Val)]);
        a.insert("A".to_string(), vec![Assignment::Shared]);
        assert_eq!(
            PartitionedGrammar::from_assignments(g, a),
            Err(PartitionError::EmptySplitGrammar(GrammarSplit::Train))
        );
    }

    #[test]
    fn manifest_round_trip() {
        let g: Grammar = crate::shipped::TOY.parse().unwrap();
        let g = crate::generation::apply_modifier(&g, &crate::generation::ModifierSpec::new("a", ["an", "teh"]))
            .unwrap()
            .grammar;
        let cfg = PartitionConfig { min_alternatives_to_split: 3, seed: 11, ..Default::default() };
        let pg = partition(&g, &cfg).unwrap();
        let manifest = pg.to_manifest();
        let back = PartitionedGrammar::from_manifest(&g, &manifest).unwrap();
        assert_eq!(back, pg);
        assert_eq!(back.to_manifest(), manifest);
    }

    #[test]
    fn manifest_errors() {
        let g: Grammar = "S -> \"a\" | \"b\"".parse().unwrap();
        let bad = |body: &str| PartitionedGrammar::from_manifest(&g, &format!("{MANIFEST_HEADER}\n{body}"));
        assert!(matches!(bad("S\t0\tshared\n"), Err(PartitionError::Manifest { .. })));
        assert!(matches!(bad("S\t0\tshared\nS\t0\tshared\n"), Err(PartitionError::Manifest { line: 3, .. })));
        assert!(matches!(bad("S\t0\tshared\nS\t2\tshared\n"), Err(PartitionError::Manifest { line: 3, .. })));
        assert!(matches!(bad("T\t0\tshared\n"), Err(PartitionError::Manifest { line: 2, .. })));
        assert!(matches!(bad("S\t0\tshared\nS\t1\tsome\n"), Err(PartitionError::Manifest { line: 3, .. })));
        assert!(matches!(bad("S\t0\n"), Err(PartitionError::Manifest { line: 2, .. })));
        assert!(matches!(
            PartitionedGrammar::from_manifest(&g, "S\t0\tshared\n"),
            Err(PartitionError::Manifest { line: 1, .. })
        ));
        assert!(bad("S\t0\tshared\nS\t1\tval\n").is_ok());
    }

    #[test]
    fn emit_counts_and_tags() {
        let g: Grammar = r#"S -> "only""#.parse().unwrap();
        let pg = partition(&g, &PartitionConfig::default()).unwrap();
        let out = emit_split_datasets(&pg, [1, 1, 1], 5).unwrap();
        for (s, split) in out.iter().zip(GrammarSplit::ALL) {
            assert_eq!(s.split, split);
            assert_eq!(s.batch.utterances, vec!["only".to_string()]);
        }
        assert!(matches!(
            emit_split_datasets(&pg, [2, 1, 1], 5),
            Err(PartitionError::Generation { split: GrammarSplit::Train, .. })
        ));
    }

    #[test]
    fn val_exclusive_strings_stay_out_of_train() {
        let g: Grammar = "S -> \"is it a \" T\nT -> 5: \"robot\" | \"droid\" | \"bot\" | \"machine\" | \"android\" | \"cyborg\""
            .parse()
            .unwrap();
        for seed in 0..20 {
            let pg = partition(&g, &PartitionConfig { seed, ..Default::default() }).unwrap();
            let val_only: Vec<String> = pg
                .exclusive("T", GrammarSplit::Val)
                .iter()
                .map(|&i| match &g.rule("T").unwrap().alternatives[i].production.symbols[0] {
                    crate::grammar::Symbol::Terminal(t) => format!("is it a {t}"),
                    _ => unreachable!(),
                })
                .collect();
            let train_lang = pg.grammar(GrammarSplit::Train).language(100).unwrap();
            let val_lang = pg.grammar(GrammarSplit::Val).language(100).unwrap();
            let [train, _, _] = emit_split_datasets(&pg, [train_lang.len(), 1, 1], seed).unwrap();
            for s in &val_only {
                assert!(val_lang.contains(s));
                assert!(!train_lang.contains(s));
                assert!(!train.batch.utterances.contains(s));
            }
        }
    }
}
