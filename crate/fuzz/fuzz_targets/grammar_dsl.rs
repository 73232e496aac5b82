#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| ruag_core::fuzzing::grammar_dsl(data));
