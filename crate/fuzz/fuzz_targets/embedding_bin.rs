#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(e) = gtda::preprocess::parse_embedding_bin(data) {
        assert_eq!(gtda::preprocess::write_embedding_bin(&e), data);
    }
});
