#![no_main]

use embed_audit::embedding_io::{decode_embeddings, ManifestFile};
use libfuzzer_sys::fuzz_target;

// Manifest JSON, a NUL byte, then the payload.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else {
        return;
    };
    let Ok(text) = std::str::from_utf8(&data[..split]) else {
        return;
    };
    let Ok(file) = ManifestFile::from_json(text) else {
        return;
    };
    if let Ok((matrix, manifest)) = decode_embeddings(&file, &data[split + 1..]) {
        assert_eq!(matrix.count(), manifest.items.len());
    }
});
