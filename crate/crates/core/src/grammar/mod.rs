//! Probabilistic context-free grammars.
//!
//! A [`Grammar`] is an ordered set of weighted rules over two kinds of
//! symbols: quoted terminals and references to other rules. Grammars are
//! always acyclic, so every language they describe is finite; this is what
//! lets us count derivations exactly and enumerate small languages.

mod parse;
mod stats;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use indexmap::IndexMap;
use sha2::{Digest, Sha256};

pub use parse::parse_grammar;
pub use stats::{estimate_unique_strings, GrammarStats};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GrammarError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("undefined non-terminal {0:?}")]
    UndefinedNonTerminal(String),
    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("rule {0:?} is defined more than once")]
    DuplicateRule(String),
    #[error("grammar has no rules")]
    NoRules,
    #[error("start symbol {0:?} is not defined")]
    UndefinedStart(String),
    #[error("rule {rule:?} has a non-positive or non-finite weight {weight}")]
    InvalidWeight { rule: String, weight: f64 },
    #[error("rule {0:?} has no alternatives")]
    NoAlternatives(String),
    #[error("rule {0:?} has an empty production (write \"\" for the empty string)")]
    EmptyProduction(String),
    #[error("invalid non-terminal name {0:?}")]
    InvalidName(String),
    #[error("language has more than {0} derivations")]
    EnumerationLimit(usize),
}

/// A grammar symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    Terminal(String),
    NonTerminal(String),
}

impl Symbol {
    pub fn terminal(s: impl Into<String>) -> Self {
        Symbol::Terminal(s.into())
    }

    pub fn non_terminal(s: impl Into<String>) -> Self {
        Symbol::NonTerminal(s.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Production {
    pub symbols: Vec<Symbol>,
}

impl Production {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Production { symbols }
    }

    pub fn references(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().filter_map(|s| match s {
            Symbol::NonTerminal(n) => Some(n.as_str()),
            Symbol::Terminal(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alternative {
    pub production: Production,
    pub weight: f64,
}

impl Alternative {
    pub fn new(production: Production, weight: f64) -> Self {
        Alternative { production, weight }
    }
}

/// Per-rule override of the partitioner's alternative-count threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Splittable {
    #[default]
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub alternatives: Vec<Alternative>,
    pub splittable: Splittable,
}

impl Rule {
    pub fn new(name: impl Into<String>, alternatives: Vec<Alternative>) -> Self {
        Rule { name: name.into(), alternatives, splittable: Splittable::Auto }
    }

    pub fn total_weight(&self) -> f64 {
        self.alternatives.iter().map(|a| a.weight).sum()
    }

    /// Weights normalized to sum to one.
    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total_weight();
        self.alternatives.iter().map(|a| a.weight / total).collect()
    }
}

pub(crate) fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A validated, acyclic, weighted context-free grammar.
///
/// Immutable once built; the start symbol is the first rule unless given
/// explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    rules: IndexMap<String, Rule>,
    start: String,
}

impl Grammar {
    /// Builds and validates a grammar.
    pub fn new(start: impl Into<String>, rules: Vec<Rule>) -> Result<Self, GrammarError> {
        let mut map = IndexMap::with_capacity(rules.len());
        for rule in rules {
            if map.contains_key(&rule.name) {
                return Err(GrammarError::DuplicateRule(rule.name));
            }
            map.insert(rule.name.clone(), rule);
        }
        let g = Grammar { rules: map, start: start.into() };
        g.validate()?;
        Ok(g)
    }

    /// Uses the first rule as the start symbol.
    pub fn from_rules(rules: Vec<Rule>) -> Result<Self, GrammarError> {
        let start = rules.first().map(|r| r.name.clone()).ok_or(GrammarError::NoRules)?;
        Grammar::new(start, rules)
    }

    fn validate(&self) -> Result<(), GrammarError> {
        if self.rules.is_empty() {
            return Err(GrammarError::NoRules);
        }
        if !self.rules.contains_key(&self.start) {
            return Err(GrammarError::UndefinedStart(self.start.clone()));
        }
        for rule in self.rules.values() {
            if !is_valid_name(&rule.name) {
                return Err(GrammarError::InvalidName(rule.name.clone()));
            }
            if rule.alternatives.is_empty() {
                return Err(GrammarError::NoAlternatives(rule.name.clone()));
            }
            for alt in &rule.alternatives {
                if !(alt.weight.is_finite() && alt.weight > 0.0) {
                    return Err(GrammarError::InvalidWeight {
                        rule: rule.name.clone(),
                        weight: alt.weight,
                    });
                }
                if alt.production.symbols.is_empty() {
                    return Err(GrammarError::EmptyProduction(rule.name.clone()));
                }
                for r in alt.production.references() {
                    if !self.rules.contains_key(r) {
                        return Err(GrammarError::UndefinedNonTerminal(r.to_string()));
                    }
                }
            }
            // a total weight that overflows would make sampling meaningless
            if !rule.total_weight().is_finite() {
                return Err(GrammarError::InvalidWeight {
                    rule: rule.name.clone(),
                    weight: rule.total_weight(),
                });
            }
        }
        self.topological_order().map(|_| ())
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.get(name)
    }

    pub fn rules(&self) -> impl ExactSizeIterator<Item = &Rule> {
        self.rules.values()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn into_rules(self) -> Vec<Rule> {
        self.rules.into_values().collect()
    }

    /// Rule indices ordered so every rule comes after the rules it references.
    /// Fails with the offending path if the grammar has a cycle.
    pub(crate) fn topological_order(&self) -> Result<Vec<usize>, GrammarError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let children: Vec<Vec<usize>> = self
            .rules
            .values()
            .map(|r| {
                r.alternatives
                    .iter()
                    .flat_map(|a| a.production.references())
                    .filter_map(|n| self.rules.get_index_of(n))
                    .collect()
            })
            .collect();
        let mut mark = vec![Mark::New; self.rules.len()];
        let mut order = Vec::with_capacity(self.rules.len());
        // explicit stack so deep grammars cannot overflow the call stack
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for root in 0..self.rules.len() {
            if mark[root] != Mark::New {
                continue;
            }
            mark[root] = Mark::Active;
            stack.push((root, 0));
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if let Some(&child) = children[node].get(*next) {
                    *next += 1;
                    match mark[child] {
                        Mark::New => {
                            mark[child] = Mark::Active;
                            stack.push((child, 0));
                        }
                        Mark::Active => {
                            let from = stack.iter().position(|&(n, _)| n == child).unwrap_or(0);
                            let mut path: Vec<String> = stack[from..]
                                .iter()
                                .map(|&(n, _)| self.rules.get_index(n).unwrap().0.clone())
                                .collect();
                            path.push(self.rules.get_index(child).unwrap().0.clone());
                            return Err(GrammarError::CycleDetected(path));
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[node] = Mark::Done;
                    order.push(node);
                    stack.pop();
                }
            }
        }
        Ok(order)
    }

    pub(crate) fn index_of(&self, name: &str) -> Option<usize> {
        self.rules.get_index_of(name)
    }

    pub(crate) fn rule_at(&self, i: usize) -> &Rule {
        &self.rules[i]
    }

    /// Number of distinct leftmost derivations from the start symbol.
    ///
    /// Saturates at `u128::MAX` for astronomically large grammars.
    pub fn count_derivations(&self) -> u128 {
        let order = self.topological_order().expect("validated grammar is acyclic");
        let mut counts = vec![0u128; self.rules.len()];
        for i in order {
            let rule = &self.rules[i];
            let mut total = 0u128;
            for alt in &rule.alternatives {
                let mut product = 1u128;
                for sym in &alt.production.symbols {
                    if let Symbol::NonTerminal(n) = sym {
                        product = product.saturating_mul(counts[self.rules.get_index_of(n).unwrap()]);
                    }
                }
                total = total.saturating_add(product);
            }
            counts[i] = total;
        }
        counts[self.rules.get_index_of(&self.start).unwrap()]
    }

    /// Every derivation's yield, in rule/alternative order, duplicates kept.
    ///
    /// Fails once any intermediate expansion exceeds `limit` strings.
    pub fn enumerate(&self, limit: usize) -> Result<Vec<String>, GrammarError> {
        let mut memo: HashMap<&str, Rc<Vec<String>>> = HashMap::new();
        let out = self.expand_all(&self.start, limit, &mut memo)?;
        Ok(out.as_ref().clone())
    }

    /// The set of distinct strings the grammar generates.
    pub fn language(&self, limit: usize) -> Result<HashSet<String>, GrammarError> {
        Ok(self.enumerate(limit)?.into_iter().collect())
    }

    fn expand_all<'a>(
        &'a self,
        name: &'a str,
        limit: usize,
        memo: &mut HashMap<&'a str, Rc<Vec<String>>>,
    ) -> Result<Rc<Vec<String>>, GrammarError> {
        if let Some(v) = memo.get(name) {
            return Ok(Rc::clone(v));
        }
        let rule = &self.rules[name];
        let mut all = Vec::new();
        for alt in &rule.alternatives {
            let mut partial = vec![String::new()];
            for sym in &alt.production.symbols {
                match sym {
                    Symbol::Terminal(t) => partial.iter_mut().for_each(|p| p.push_str(t)),
                    Symbol::NonTerminal(n) => {
                        let tails = self.expand_all(n, limit, memo)?;
                        if partial.len().saturating_mul(tails.len()) > limit {
                            return Err(GrammarError::EnumerationLimit(limit));
                        }
                        partial = partial
                            .iter()
                            .flat_map(|p| tails.iter().map(move |t| format!("{p}{t}")))
                            .collect();
                    }
                }
            }
            all.extend(partial);
            if all.len() > limit {
                return Err(GrammarError::EnumerationLimit(limit));
            }
        }
        let rc = Rc::new(all);
        memo.insert(name, Rc::clone(&rc));
        Ok(rc)
    }

    /// Canonical DSL text: one rule per line, weights omitted when exactly 1.
    pub fn to_dsl(&self) -> String {
        self.to_string()
    }

    /// Short stable identifier derived from the canonical DSL text.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_dsl().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub(crate) fn escape_terminal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, sym) in self.symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match sym {
                Symbol::Terminal(t) => f.write_str(&escape_terminal(t))?,
                Symbol::NonTerminal(n) => f.write_str(n)?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        match self.splittable {
            Splittable::Auto => {}
            Splittable::Always => f.write_str(" @split")?,
            Splittable::Never => f.write_str(" @nosplit")?,
        }
        f.write_str(" ->")?;
        for (i, alt) in self.alternatives.iter().enumerate() {
            if i > 0 {
                f.write_str(" |")?;
            }
            if alt.weight != 1.0 {
                write!(f, " {:?}:", alt.weight)?;
            }
            write!(f, " {}", alt.production)?;
        }
        Ok(())
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // the start rule is emitted first so the text re-parses to the same start
        writeln!(f, "{}", self.rules[&self.start])?;
        for rule in self.rules.values().filter(|r| r.name != self.start) {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

impl FromStr for Grammar {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_grammar(s)
    }
}
