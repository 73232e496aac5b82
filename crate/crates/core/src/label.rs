//! Gold/predicted labels and dataset split tags.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The three utterance classes.
///
/// `Pos` asks whether the system is human, `Aic` is ambiguous-if-clarify and
/// `Neg` is anything where a disclosure would be disfluent. The declaration
/// order is the canonical class order used for score vectors and tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Pos,
    Aic,
    Neg,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Pos, Label::Aic, Label::Neg];

    pub fn index(self) -> usize {
        match self {
            Label::Pos => 0,
            Label::Aic => 1,
            Label::Neg => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    /// Single-letter code used in dataset files.
    pub fn code(self) -> &'static str {
        match self {
            Label::Pos => "p",
            Label::Aic => "a",
            Label::Neg => "n",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Pos => "POS",
            Label::Aic => "AIC",
            Label::Neg => "NEG",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label {0:?} (expected p, a or n)")]
pub struct ParseLabelError(pub String);

impl FromStr for Label {
    type Err = ParseLabelError;

    /// Accepts the dataset codes plus the long spellings found in exports.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p" | "pos" | "positive" => Ok(Label::Pos),
            "a" | "aic" | "ambiguous" => Ok(Label::Aic),
            "n" | "neg" | "negative" => Ok(Label::Neg),
            _ => Err(ParseLabelError(s.to_string())),
        }
    }
}

/// Dataset split tag attached to a labeled row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    AddTest,
    None,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::AddTest => "addtest",
            Split::None => "none",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown split {0:?} (expected train, val, test, addtest or none)")]
pub struct ParseSplitError(pub String);

impl FromStr for Split {
    type Err = ParseSplitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "addtest" => Ok(Split::AddTest),
            "none" => Ok(Split::None),
            _ => Err(ParseSplitError(s.to_string())),
        }
    }
}

/// One of the three splits a grammar partition can assign alternatives to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GrammarSplit {
    Train,
    Val,
    Test,
}

impl GrammarSplit {
    pub const ALL: [GrammarSplit; 3] = [GrammarSplit::Train, GrammarSplit::Val, GrammarSplit::Test];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        Split::from(self).as_str()
    }
}

impl From<GrammarSplit> for Split {
    fn from(s: GrammarSplit) -> Split {
        match s {
            GrammarSplit::Train => Split::Train,
            GrammarSplit::Val => Split::Val,
            GrammarSplit::Test => Split::Test,
        }
    }
}

impl fmt::Display for GrammarSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_codes_parse_back() {
        for l in Label::ALL {
            assert_eq!(l.code().parse::<Label>().unwrap(), l);
            assert_eq!(Label::from_index(l.index()), Some(l));
        }
        assert!("x".parse::<Label>().is_err());
    }

    #[test]
    fn split_names_parse_back() {
        for s in [Split::Train, Split::Val, Split::Test, Split::AddTest, Split::None] {
            assert_eq!(s.as_str().parse::<Split>().unwrap(), s);
        }
        assert!("Train".parse::<Split>().is_err());
    }
}
