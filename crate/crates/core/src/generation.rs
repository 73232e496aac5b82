//! Weighted sampling from grammars and token-level "modifier" rewrites.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;

use crate::grammar::{is_valid_name, Alternative, Grammar, GrammarError, Production, Rule, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerationError {
    #[error("only {found} distinct strings found, {requested} requested")]
    ExhaustedLanguage {
        found: usize,
        requested: usize,
        /// The distinct strings that were found, in first-seen order.
        partial: Vec<String>,
    },
    #[error("sample count must be at least 1")]
    ZeroCount,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModifierError {
    #[error("invalid modifier: {0}")]
    InvalidSpec(String),
    #[error("non-terminal {0:?} already exists")]
    NameCollision(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// A batch of sampled utterances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    pub utterances: Vec<String>,
    pub grammar_id: String,
    pub seed: u64,
    pub dedup: bool,
}

enum CSym {
    T(String),
    N(usize),
}

struct CRule {
    alts: Vec<Vec<CSym>>,
    choose: Option<WeightedIndex<f64>>,
}

/// A seeded weighted sampler over a grammar.
///
/// Each draw expands the start symbol, choosing each alternative with
/// probability proportional to its weight.
pub struct Sampler {
    rules: Vec<CRule>,
    start: usize,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(g: &Grammar, seed: u64) -> Self {
        let rules = g
            .rules()
            .map(|r| {
                let alts = r
                    .alternatives
                    .iter()
                    .map(|a| {
                        a.production
                            .symbols
                            .iter()
                            .map(|s| match s {
                                Symbol::Terminal(t) => CSym::T(t.clone()),
                                Symbol::NonTerminal(n) => CSym::N(g.index_of(n).unwrap()),
                            })
                            .collect()
                    })
                    .collect();
                let choose = (r.alternatives.len() > 1).then(|| {
                    WeightedIndex::new(r.alternatives.iter().map(|a| a.weight))
                        .expect("validated weights are positive and finite")
                });
                CRule { alts, choose }
            })
            .collect();
        Sampler { rules, start: g.index_of(g.start()).unwrap(), rng: crate::seed::rng(seed) }
    }

    pub fn draw(&mut self) -> String {
        let mut out = String::new();
        let mut stack: Vec<&CSym> = Vec::new();
        let start = &self.rules[self.start];
        let alt = match &start.choose {
            Some(d) => d.sample(&mut self.rng),
            None => 0,
        };
        stack.extend(start.alts[alt].iter().rev());
        while let Some(sym) = stack.pop() {
            match sym {
                CSym::T(t) => out.push_str(t),
                CSym::N(i) => {
                    let rule = &self.rules[*i];
                    let alt = match &rule.choose {
                        Some(d) => d.sample(&mut self.rng),
                        None => 0,
                    };
                    stack.extend(rule.alts[alt].iter().rev());
                }
            }
        }
        out
    }
}

/// Default rejection budget for deduplicated sampling.
pub fn default_max_attempts(n: usize) -> usize {
    n.saturating_mul(50)
}

/// Draws `n` utterances. With `dedup`, keeps drawing until `n` distinct
/// strings are found or `max_attempts` draws have been made.
pub fn sample(
    g: &Grammar,
    n: usize,
    seed: u64,
    dedup: bool,
    max_attempts: usize,
) -> Result<SampleBatch, GenerationError> {
    if n == 0 {
        return Err(GenerationError::ZeroCount);
    }
    let mut sampler = Sampler::new(g, seed);
    let utterances = if dedup {
        let mut seen = HashSet::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        while out.len() < n && attempts < max_attempts {
            attempts += 1;
            let s = sampler.draw();
            if seen.insert(s.clone()) {
                out.push(s);
            }
        }
        if out.len() < n {
            return Err(GenerationError::ExhaustedLanguage {
                found: out.len(),
                requested: n,
                partial: out,
            });
        }
        out
    } else {
        (0..n).map(|_| sampler.draw()).collect()
    };
    Ok(SampleBatch { utterances, grammar_id: g.fingerprint(), seed, dedup })
}

/// Replaces a whitespace-delimited token with a weighted choice between the
/// original spelling and some variants.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifierSpec {
    pub target: String,
    pub variants: Vec<(String, f64)>,
    pub original_weight: f64,
    /// Name of the introduced rule; derived from the target when absent.
    pub rule_name: Option<String>,
}

impl ModifierSpec {
    /// Variants at weight 1 against an original weight of 8.
    pub fn new<S: Into<String>>(target: impl Into<String>, variants: impl IntoIterator<Item = S>) -> Self {
        ModifierSpec {
            target: target.into(),
            variants: variants.into_iter().map(|v| (v.into(), 1.0)).collect(),
            original_weight: 8.0,
            rule_name: None,
        }
    }

    pub fn validate(&self) -> Result<(), ModifierError> {
        let bad = |m: &str| Err(ModifierError::InvalidSpec(m.to_string()));
        if self.target.is_empty() || self.target.chars().any(char::is_whitespace) {
            return bad("target must be a single non-empty token");
        }
        if self.variants.is_empty() {
            return bad("at least one variant is required");
        }
        if !(self.original_weight.is_finite() && self.original_weight > 0.0) {
            return bad("original weight must be positive");
        }
        for (v, w) in &self.variants {
            if !(w.is_finite() && *w > 0.0) {
                return bad(&format!("variant {v:?} has a non-positive weight"));
            }
            if *w >= self.original_weight {
                return bad(&format!("variant {v:?} must weigh less than the original"));
            }
        }
        Ok(())
    }

    pub fn resolved_rule_name(&self) -> String {
        self.rule_name.clone().unwrap_or_else(|| {
            let body: String = self
                .target
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            format!("Mod_{body}")
        })
    }
}

/// Result of [`apply_modifier`].
#[derive(Debug, Clone, PartialEq)]
pub struct Modified {
    pub grammar: Grammar,
    /// Number of token occurrences rewritten; zero means the target was absent.
    pub occurrences: usize,
    pub rule_name: String,
}

impl Modified {
    pub fn target_found(&self) -> bool {
        self.occurrences > 0
    }
}

/// Splits a terminal around whitespace-delimited occurrences of `target`.
fn rewrite_terminal(text: &str, target: &str, rule: &str) -> Option<Vec<Symbol>> {
    let mut out = Vec::new();
    let mut pending_from = 0;
    let mut hit = false;
    let mut i = 0;
    let bytes_len = text.len();
    while i < bytes_len {
        let rest = &text[i..];
        let ws = rest.len() - rest.trim_start().len();
        if ws > 0 {
            i += ws;
            continue;
        }
        let tok_len = rest.find(char::is_whitespace).unwrap_or(rest.len());
        if &rest[..tok_len] == target {
            if pending_from < i {
                out.push(Symbol::Terminal(text[pending_from..i].to_string()));
            }
            out.push(Symbol::NonTerminal(rule.to_string()));
            pending_from = i + tok_len;
            hit = true;
        }
        i += tok_len;
    }
    if !hit {
        return None;
    }
    if pending_from < bytes_len {
        out.push(Symbol::Terminal(text[pending_from..].to_string()));
    }
    Some(out)
}

/// Rewrites every terminal containing `spec.target` as a whitespace-delimited
/// token so that position derives a new rule
/// `{original: original_weight} ∪ variants`. Matching is case-sensitive.
///
/// When the target never occurs the grammar is returned unchanged and a
/// warning is logged.
pub fn apply_modifier(g: &Grammar, spec: &ModifierSpec) -> Result<Modified, ModifierError> {
    spec.validate()?;
    let name = spec.resolved_rule_name();
    if !is_valid_name(&name) {
        return Err(ModifierError::InvalidSpec(format!("{name:?} is not a valid rule name")));
    }
    if g.rule(&name).is_some() {
        return Err(ModifierError::NameCollision(name));
    }
    let mut occurrences = 0;
    let mut rules: Vec<Rule> = g.rules().cloned().collect();
    for rule in &mut rules {
        for alt in &mut rule.alternatives {
            let mut symbols = Vec::with_capacity(alt.production.symbols.len());
            for sym in alt.production.symbols.drain(..) {
                match &sym {
                    Symbol::Terminal(t) => match rewrite_terminal(t, &spec.target, &name) {
                        Some(parts) => {
                            occurrences += parts.iter().filter(|s| matches!(s, Symbol::NonTerminal(_))).count();
                            symbols.extend(parts);
                        }
                        None => symbols.push(sym),
                    },
                    Symbol::NonTerminal(_) => symbols.push(sym),
                }
            }
            alt.production.symbols = symbols;
        }
    }
    if occurrences == 0 {
        log::warn!("modifier target {:?} not found in any terminal", spec.target);
        return Ok(Modified { grammar: g.clone(), occurrences, rule_name: name });
    }
    let mut alternatives = vec![Alternative::new(
        Production::new(vec![Symbol::terminal(spec.target.clone())]),
        spec.original_weight,
    )];
    alternatives.extend(
        spec.variants
            .iter()
            .map(|(v, w)| Alternative::new(Production::new(vec![Symbol::terminal(v.clone())]), *w)),
    );
    rules.push(Rule::new(name.clone(), alternatives));
    let grammar = Grammar::new(g.start(), rules)?;
    Ok(Modified { grammar, occurrences, rule_name: name })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Grammar {
        crate::shipped::TOY.parse().unwrap()
    }

    #[test]
    fn toy_dedup_gives_whole_language() {
        let g = toy();
        let batch = sample(&g, 12, 5, true, default_max_attempts(12)).unwrap();
        let got: HashSet<_> = batch.utterances.iter().cloned().collect();
        assert_eq!(got, g.language(100).unwrap());
        assert!(batch.dedup);
        assert_eq!(batch.grammar_id, g.fingerprint());
    }

    #[test]
    fn dedup_exhaustion_reports_partial() {
        let g = toy();
        match sample(&g, 13, 5, true, 1000) {
            Err(GenerationError::ExhaustedLanguage { found, requested, partial }) => {
                assert_eq!((found, requested), (12, 13));
                assert_eq!(partial.len(), 12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_string_no_dedup() {
        let g: Grammar = r#"S -> "a""#.parse().unwrap();
        assert_eq!(sample(&g, 3, 0, false, 0).unwrap().utterances, ["a", "a", "a"]);
        assert_eq!(sample(&g, 0, 0, false, 0), Err(GenerationError::ZeroCount));
    }

    #[test]
    fn robot_frequency_tracks_weight() {
        let g: Grammar = r#"S -> 3: "robot" | 1: "chatbot""#.parse().unwrap();
        let batch = sample(&g, 40_000, 1234, false, 0).unwrap();
        let freq = batch.utterances.iter().filter(|u| *u == "robot").count() as f64 / 40_000.0;
        assert!((0.74..=0.76).contains(&freq), "freq {freq}");
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let g = toy();
        assert_eq!(sample(&g, 50, 9, false, 0), sample(&g, 50, 9, false, 0));
        assert_ne!(sample(&g, 50, 9, false, 0), sample(&g, 50, 10, false, 0));
    }

    #[test]
    fn modifier_example() {
        let g: Grammar = r#"S -> "is their dog""#.parse().unwrap();
        let spec = ModifierSpec {
            target: "their".into(),
            variants: vec![("there".into(), 1.0), ("they're".into(), 1.0)],
            original_weight: 8.0,
            rule_name: None,
        };
        let m = apply_modifier(&g, &spec).unwrap();
        assert_eq!(m.occurrences, 1);
        assert_eq!(m.rule_name, "Mod_their");
        let lang = m.grammar.language(10).unwrap();
        let want: HashSet<String> =
            ["is their dog", "is there dog", "is they're dog"].iter().map(|s| s.to_string()).collect();
        assert_eq!(lang, want);
        let probs = m.grammar.rule("Mod_their").unwrap().probabilities();
        assert!(probs[0] > probs[1] && probs[0] > probs[2]);
        assert_eq!(m.grammar.count_derivations(), 3 * g.count_derivations());
    }

    #[test]
    fn modifier_is_token_level_and_case_sensitive() {
        let g: Grammar = r#"S -> "theirs is their" | "Their dog" | "their""#.parse().unwrap();
        let m = apply_modifier(&g, &ModifierSpec::new("their", ["there"])).unwrap();
        assert_eq!(m.occurrences, 2);
        let lang = m.grammar.language(20).unwrap();
        assert!(lang.contains("theirs is there"));
        assert!(lang.contains("Their dog"));
        assert!(lang.contains("there"));
        assert!(!lang.contains("theres is their"));
    }

    #[test]
    fn modifier_absent_target_is_noop() {
        let g = toy();
        let m = apply_modifier(&g, &ModifierSpec::new("their", ["there"])).unwrap();
        assert!(!m.target_found());
        assert_eq!(m.grammar, g);
    }

    #[test]
    fn modifier_errors() {
        let g: Grammar = "S -> Mod_a\nMod_a -> \"a\"".parse().unwrap();
        assert_eq!(
            apply_modifier(&g, &ModifierSpec::new("a", ["b"])),
            Err(ModifierError::NameCollision("Mod_a".into()))
        );
        let mut spec = ModifierSpec::new("a", ["b"]);
        spec.original_weight = 1.0;
        assert!(matches!(apply_modifier(&g, &spec), Err(ModifierError::InvalidSpec(_))));
        assert!(matches!(
            apply_modifier(&g, &ModifierSpec::new("a b", ["c"])),
            Err(ModifierError::InvalidSpec(_))
        ));
        assert!(matches!(
            apply_modifier(&g, &ModifierSpec::new("a", Vec::<String>::new())),
            Err(ModifierError::InvalidSpec(_))
        ));
    }

    #[test]
    fn rewrite_keeps_whitespace_layout() {
        let parts = rewrite_terminal("  x  their\tend their", "their", "M").unwrap();
        assert_eq!(
            parts,
            vec![
                Symbol::terminal("  x  "),
                Symbol::non_terminal("M"),
                Symbol::terminal("\tend "),
                Symbol::non_terminal("M"),
            ]
        );
    }
}
