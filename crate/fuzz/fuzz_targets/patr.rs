#![no_main]

use libfuzzer_sys::fuzz_target;
use pat_core::io::decode_patr;

fuzz_target!(|data: &[u8]| {
    if let Ok(raw) = decode_patr(data) {
        assert_eq!(raw.samples.len(), raw.n_nodes * raw.n_samples);
    }
});
