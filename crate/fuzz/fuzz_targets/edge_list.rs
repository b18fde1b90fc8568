#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(g) = gtda::graph::parse_edge_list(text, None) {
            let again = gtda::graph::parse_edge_list(&gtda::graph::write_edge_list(&g), Some(g.n())).unwrap();
            assert_eq!(again, g);
        }
    }
});
