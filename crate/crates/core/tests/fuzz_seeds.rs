//! Replays the checked-in fuzz corpus through the fuzz entry points.

use std::fs;
use std::path::Path;

use ruag_core::fuzzing;

fn replay(target: &str, run: fn(&[u8])) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap_or_else(|e| panic!("{}: {e}", dir.display())) {
        let path = entry.unwrap().path();
        run(&fs::read(&path).unwrap());
        n += 1;
    }
    assert!(n > 0, "no seeds for {target}");
}

#[test]
fn grammar_dsl() {
    replay("grammar_dsl", fuzzing::grammar_dsl);
}

#[test]
fn dataset_tsv() {
    replay("dataset_tsv", fuzzing::dataset_tsv);
}

#[test]
fn partition_manifest() {
    replay("partition_manifest", fuzzing::partition_manifest);
}

#[test]
fn guard_config() {
    replay("guard_config", fuzzing::guard_config);
}

#[test]
fn model_file() {
    replay("model_file", fuzzing::model_file);
}

#[test]
fn classify_utterance() {
    replay("classify_utterance", fuzzing::classify_utterance);
}

#[test]
fn truncated_and_flipped_models_are_rejected_cleanly() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/model_file");
    for entry in fs::read_dir(dir).unwrap() {
        let bytes = fs::read(entry.unwrap().path()).unwrap();
        for cut in (0..bytes.len()).step_by(7) {
            fuzzing::model_file(&bytes[..cut]);
        }
        for i in (0..bytes.len()).step_by(13) {
            let mut b = bytes.clone();
            b[i] ^= 0xA5;
            fuzzing::model_file(&b);
        }
    }
}
