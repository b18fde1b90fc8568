#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(doc) = gtda::report::ReebNetDocument::from_json(text) {
            let _ = doc.to_net();
            let _ = gtda::report::to_dot(&doc);
            let _ = gtda::report::to_graphml(&doc);
            let _ = gtda::report::to_html(&doc);
        }
    }
});
