#![no_main]

use libfuzzer_sys::fuzz_target;
use pat_core::io::{decode_patf, encode_patf};

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = decode_patf(data) {
        let again = decode_patf(&encode_patf(&f)).expect("re-encoded field decodes");
        assert_eq!(again.values(), f.values());
    }
});
