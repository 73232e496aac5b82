//! Toolkit for generating, detecting and answering the "are you a robot?"
//! user intent.

pub mod classifiers;
pub mod dataset;
pub mod evaluation;
#[doc(hidden)]
pub mod fuzzing;
pub mod generation;
pub mod grammar;
pub mod guard;
pub mod label;
pub mod partition;
pub mod recognizer;
pub mod seed;
pub mod shipped;
pub mod surrogate;
pub mod text;

pub use grammar::{Grammar, GrammarError};
pub use label::{GrammarSplit, Label, Split};
