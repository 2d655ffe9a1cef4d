#![no_main]

use embed_audit::embedding_io::{decode_payload, encode_payload, EmbeddingMatrix};
use libfuzzer_sys::fuzz_target;

// The first two bytes choose the shape; the rest is the payload.
fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let (count, dim) = (data[0] as usize, data[1] as usize);
    let Ok(values) = decode_payload(&data[2..], count, dim) else {
        return;
    };
    if let Ok(m) = EmbeddingMatrix::new(dim, count, values) {
        assert_eq!(encode_payload(&m), &data[2..]);
    }
});
