#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = gtda::diagnose::parse_labels_csv(text, None) {
            assert!(file.labels.validate().is_ok());
            let _ = gtda::diagnose::write_labels_csv(&file);
        }
    }
});
