#![no_main]

use libfuzzer_sys::fuzz_target;
use pat_core::io::{decode_nodes_csv, encode_nodes_csv};

fuzz_target!(|text: &str| {
    if let Ok(nodes) = decode_nodes_csv(text) {
        let again = decode_nodes_csv(&encode_nodes_csv(&nodes)).expect("re-encoded nodes decode");
        assert_eq!(again, nodes);
    }
});
