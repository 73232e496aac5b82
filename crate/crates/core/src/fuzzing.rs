//! Entry points shared by the fuzz targets and the seed-replay test. Each
//! accepts arbitrary bytes, must not panic, and checks a round trip when the
//! input parses.

use std::sync::OnceLock;

use crate::classifiers::model_io::SavedModel;
use crate::dataset::Dataset;
use crate::grammar::Grammar;
use crate::guard::{guard, DisclosureConfig};
use crate::partition::PartitionedGrammar;
use crate::recognizer::{member, RecognizerModel};
use crate::{shipped, text};

fn utf8(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

pub fn grammar_dsl(data: &[u8]) {
    let Some(src) = utf8(data) else { return };
    let Ok(g) = src.parse::<Grammar>() else { return };
    let printed = g.to_string();
    let again: Grammar = printed.parse().unwrap_or_else(|e| panic!("reparse failed: {e}\n{printed}"));
    assert_eq!(g, again);
}

pub fn dataset_tsv(data: &[u8]) {
    let Some(src) = utf8(data) else { return };
    let Ok(d) = Dataset::parse(src) else { return };
    let tsv = d.to_tsv().expect("parsed rows are writable");
    assert_eq!(Dataset::parse(&tsv).expect("written rows parse"), d);
}

fn toy() -> &'static Grammar {
    static G: OnceLock<Grammar> = OnceLock::new();
    G.get_or_init(|| shipped::TOY.parse().expect("shipped grammar"))
}

pub fn partition_manifest(data: &[u8]) {
    let Some(src) = utf8(data) else { return };
    let Ok(p) = PartitionedGrammar::from_manifest(toy(), src) else { return };
    let again = PartitionedGrammar::from_manifest(toy(), &p.to_manifest()).expect("written manifest loads");
    assert_eq!(p, again);
}

pub fn guard_config(data: &[u8]) {
    let Some(src) = utf8(data) else { return };
    let Ok(c) = DisclosureConfig::parse(src) else { return };
    assert_eq!(DisclosureConfig::parse(&c.to_config_string()).expect("written config parses"), c);
    let d = guard("are you a robot?", recognizer(), &c).expect("validated config");
    assert!(d.response.is_some_and(|r| !r.is_empty()));
}

pub fn model_file(data: &[u8]) {
    let Ok(m) = SavedModel::from_bytes(data) else { return };
    let p = m.classifier().predict("are you a robot?");
    assert!(p.scores.iter().all(|s| s.is_finite()), "{:?}", p.scores);
}

fn recognizer() -> &'static RecognizerModel {
    static R: OnceLock<RecognizerModel> = OnceLock::new();
    R.get_or_init(|| {
        let pos = shipped::grammar("pos").expect("shipped grammar");
        let aic = shipped::grammar("aic").expect("shipped grammar");
        RecognizerModel::new(&pos, &aic, true)
    })
}

pub fn classify_utterance(data: &[u8]) {
    let Some(s) = utf8(data) else { return };
    let r = recognizer();
    let label = r.classify(s);
    if let Ok(norm) = text::normalize(s) {
        if member(r.pos_grammar(), &norm) {
            assert_eq!(label, crate::Label::Pos, "{norm:?}");
        }
    }
}
