//! Fuzz the weight-file decoder: arbitrary bytes -> JSON -> WeightSequence.
//! Parsing and validation must never panic, and any sequence that validates
//! must survive a serialize/deserialize round trip and a stats evaluation.

#![no_main]

use gmconc::weights::WeightSequence;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(weights) = serde_json::from_str::<WeightSequence>(text) else {
        return;
    };
    let violations = weights.validate();
    if !violations.is_empty() {
        for v in violations {
            let _ = v.to_string();
        }
        return;
    }
    // A valid sequence must round-trip exactly and support its statistics.
    let stats = weights.stats();
    assert!(stats.a_max > 0.0);
    assert!(!stats.log_weight_gm.is_nan());
    let json = serde_json::to_string(&weights).expect("serialize");
    let back: WeightSequence = serde_json::from_str(&json).expect("reparse");
    assert_eq!(weights, back);
});
