//! Fuzz the CLI argument parser: arbitrary argv vectors and weight-spec
//! strings must parse or error, never panic.

#![no_main]

use gmconc_cli::config::{parse_args, WeightSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let argv = std::iter::once("gmconc").chain(text.split_whitespace());
    let _ = parse_args(argv);
    let _ = text.parse::<WeightSpec>();
});
