//! Grammars bundled with the crate.
//!
//! The intent grammars are a hand-built reconstruction sized for desk-scale
//! experiments, not a replica of any published grammar.

use crate::grammar::Grammar;

/// Four-rule example grammar with a 12-string language.
pub const TOY: &str = include_str!("../grammars/toy.cfg");
/// Phrasings that clearly ask whether the system is human.
pub const POS: &str = include_str!("../grammars/pos.cfg");
/// Ambiguous-if-clarify phrasings.
pub const AIC: &str = include_str!("../grammars/aic.cfg");
/// Non-intent utterances, many of them lexically close to the intent.
pub const NEG: &str = include_str!("../grammars/neg.cfg");
/// Small talk used as an unlabeled corpus for negative mining.
pub const CHITCHAT: &str = include_str!("../grammars/chitchat.cfg");

/// Name and source of every shipped grammar.
pub const ALL: [(&str, &str); 5] = [("toy", TOY), ("pos", POS), ("aic", AIC), ("neg", NEG), ("chitchat", CHITCHAT)];

/// Parses a shipped grammar by name.
pub fn grammar(name: &str) -> Option<Grammar> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, src)| src.parse().expect("shipped grammars are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::Sampler;
    use crate::recognizer::member;
    use crate::text::normalize;

    #[test]
    fn all_parse() {
        for (name, _) in ALL {
            assert!(grammar(name).is_some(), "{name}");
        }
        assert!(grammar("missing").is_none());
    }

    #[test]
    fn samples_are_normalized() {
        for (name, _) in ALL {
            let mut s = Sampler::new(&grammar(name).unwrap(), 1);
            for _ in 0..500 {
                let u = s.draw();
                assert_eq!(normalize(&u).unwrap(), u, "{name}");
            }
        }
    }

    #[test]
    fn languages_are_disjoint() {
        let pos = grammar("pos").unwrap();
        let aic = grammar("aic").unwrap();
        for (name, other) in [("aic", &aic), ("neg", &grammar("neg").unwrap()), ("chitchat", &grammar("chitchat").unwrap())] {
            let mut s = Sampler::new(other, 2);
            for _ in 0..2000 {
                let u = s.draw();
                assert!(!member(&pos, &u), "{name}: {u}");
                if name != "aic" {
                    assert!(!member(&aic, &u), "{name}: {u}");
                }
            }
        }
        let mut s = Sampler::new(&pos, 3);
        for _ in 0..2000 {
            assert!(!member(&aic, &s.draw()));
        }
    }

    #[test]
    fn language_sizes() {
        let n = |name: &str| grammar(name).unwrap().count_derivations();
        assert_eq!(n("toy"), 12);
        assert!(n("pos") > 10_000, "{}", n("pos"));
        assert!(n("aic") > 500, "{}", n("aic"));
        assert!(n("neg") > 2_000, "{}", n("neg"));
    }
}
