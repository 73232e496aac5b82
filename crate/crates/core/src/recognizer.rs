//! Grammar-membership classifier.
//!
//! An utterance is POS if it (or one of a few sentence-level candidates
//! drawn from it) is in the positive grammar's language, AIC if it is in the
//! AIC grammar's language, and NEG otherwise.

use std::collections::HashMap;

use crate::classifiers::{IntentClassifier, Prediction};
use crate::grammar::{Grammar, Rule, Symbol};
use crate::label::Label;
use crate::text::{normalize, sentences, strip_terminal_punct};

/// Memoized matcher over byte positions of one input string.
struct Matcher<'g, 't> {
    g: &'g Grammar,
    text: &'t [u8],
    memo: HashMap<(usize, usize), Vec<usize>>,
}

impl Matcher<'_, '_> {
    /// Sorted end positions reachable by deriving `rule` starting at `i`.
    fn rule_ends(&mut self, rule: usize, i: usize) -> Vec<usize> {
        if let Some(v) = self.memo.get(&(rule, i)) {
            return v.clone();
        }
        let r: &Rule = self.g.rule_at(rule);
        let mut ends = Vec::new();
        for alt in &r.alternatives {
            let mut frontier = vec![i];
            for sym in &alt.production.symbols {
                let mut next = Vec::new();
                for &p in &frontier {
                    match sym {
                        Symbol::Terminal(t) => {
                            if self.text[p..].starts_with(t.as_bytes()) {
                                next.push(p + t.len());
                            }
                        }
                        Symbol::NonTerminal(n) => {
                            let idx = self.g.index_of(n).expect("validated reference");
                            next.extend(self.rule_ends(idx, p));
                        }
                    }
                }
                next.sort_unstable();
                next.dedup();
                frontier = next;
                if frontier.is_empty() {
                    break;
                }
            }
            ends.extend(frontier);
        }
        ends.sort_unstable();
        ends.dedup();
        self.memo.insert((rule, i), ends.clone());
        ends
    }
}

/// True iff `text` is exactly a string of `g`'s language. No normalization
/// is applied to either side.
pub fn member(g: &Grammar, text: &str) -> bool {
    let start = g.index_of(g.start()).expect("start symbol");
    let mut m = Matcher { g, text: text.as_bytes(), memo: HashMap::new() };
    m.rule_ends(start, 0).binary_search(&text.len()).is_ok()
}

/// Copy of `g` with every terminal lowercased, matching normalized input.
fn lowercased(g: &Grammar) -> Grammar {
    let rules = g
        .rules()
        .map(|r| {
            let mut r = r.clone();
            for alt in &mut r.alternatives {
                for s in &mut alt.production.symbols {
                    if let Symbol::Terminal(t) = s {
                        *t = t.to_lowercase();
                    }
                }
            }
            r
        })
        .collect();
    Grammar::new(g.start(), rules).expect("lowercasing keeps a grammar valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognizerModel {
    pos: Grammar,
    aic: Grammar,
    pub heuristics_enabled: bool,
}

impl RecognizerModel {
    /// Terminals are lowercased so they line up with normalized utterances.
    pub fn new(pos: &Grammar, aic: &Grammar, heuristics_enabled: bool) -> Self {
        RecognizerModel { pos: lowercased(pos), aic: lowercased(aic), heuristics_enabled }
    }

    pub fn pos_grammar(&self) -> &Grammar {
        &self.pos
    }

    pub fn aic_grammar(&self) -> &Grammar {
        &self.aic
    }

    /// Strings tried against the grammars, in a fixed order.
    pub fn candidates(&self, normalized: &str) -> Vec<String> {
        let mut base: Vec<&str> = vec![normalized];
        if self.heuristics_enabled {
            let sents = sentences(normalized);
            if let Some(last) = sents.last() {
                base.push(last);
            }
            base.extend(sents.iter().filter(|s| s.ends_with('?')));
        }
        let mut out: Vec<String> = Vec::new();
        for c in base {
            for s in [Some(c), strip_terminal_punct(c)].into_iter().flatten() {
                if !out.iter().any(|o| o == s) {
                    out.push(s.to_string());
                }
            }
        }
        out
    }

    pub fn classify(&self, text: &str) -> Label {
        let Ok(norm) = normalize(text) else {
            return Label::Neg;
        };
        let cands = self.candidates(&norm);
        if cands.iter().any(|c| member(&self.pos, c)) {
            Label::Pos
        } else if cands.iter().any(|c| member(&self.aic, c)) {
            Label::Aic
        } else {
            Label::Neg
        }
    }
}

impl IntentClassifier for RecognizerModel {
    fn id(&self) -> &str {
        "grammar"
    }

    fn predict(&self, text: &str) -> Prediction {
        let label = self.classify(text);
        let mut scores = [0.0; 3];
        scores[label.index()] = 1.0;
        Prediction { text: text.to_string(), label, scores }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shipped::TOY;

    fn toy() -> Grammar {
        TOY.parse().unwrap()
    }

    #[test]
    fn toy_membership() {
        let g = toy();
        assert!(member(&g, "are you a robot"));
        assert!(member(&g, "am i talking to a real person"));
        assert!(!member(&g, "are you a doctor"));
        assert!(!member(&g, "are you a robotx"));
        assert!(!member(&g, "are you a "));
    }

    #[test]
    fn epsilon_and_ambiguity() {
        let g: Grammar = "S -> A A\nA -> \"\" | \"a\" | \"aa\"".parse().unwrap();
        for s in ["", "a", "aa", "aaa", "aaaa"] {
            assert!(member(&g, s), "{s:?}");
        }
        assert!(!member(&g, "aaaaa"));
    }

    #[test]
    fn non_ascii_terminals() {
        let g: Grammar = "S -> \"é\" \"ü\"".parse().unwrap();
        assert!(member(&g, "éü"));
        assert!(!member(&g, "é"));
    }

    fn model() -> RecognizerModel {
        let pos: Grammar = "S -> \"Are you a \" X\nX -> \"robot\" | \"bot\"".parse().unwrap();
        let aic: Grammar = "S -> \"you sound robotic\" | \"are you a bot\"".parse().unwrap();
        RecognizerModel::new(&pos, &aic, true)
    }

    #[test]
    fn heuristics() {
        let m = model();
        assert_eq!(m.classify("That didn't make sense. Are you a robot?"), Label::Pos);
        assert_eq!(m.classify("Are you a robot? I need to know."), Label::Pos);
        assert_eq!(m.classify("do you like robots?"), Label::Neg);
        assert_eq!(m.classify("you sound robotic"), Label::Aic);
        assert_eq!(m.classify("   "), Label::Neg);
        let plain = RecognizerModel::new(m.pos_grammar(), m.aic_grammar(), false);
        assert_eq!(plain.classify("That didn't make sense. Are you a robot?"), Label::Neg);
        assert_eq!(plain.classify("ARE you a  robot!"), Label::Pos);
    }

    #[test]
    fn pos_wins_over_aic() {
        assert_eq!(model().classify("are you a bot?"), Label::Pos);
    }

    #[test]
    fn candidate_order() {
        let c = model().candidates("hi. are you a bot? ok!");
        assert_eq!(c, ["hi. are you a bot? ok!", "hi. are you a bot? ok", "ok!", "ok", "are you a bot?", "are you a bot"]);
    }
}
