#![no_main]

use embed_audit::embedding_io::parse_embedding_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((matrix, manifest)) = parse_embedding_csv(data) {
        assert_eq!(matrix.count(), manifest.items.len());
    }
});
