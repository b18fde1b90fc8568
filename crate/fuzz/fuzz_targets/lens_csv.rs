#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = gtda::lens::parse_lens_csv(text) {
            assert!(p.values().iter().all(|x| x.is_finite()));
            let _ = gtda::lens::minmax_normalize(&p);
        }
    }
});
