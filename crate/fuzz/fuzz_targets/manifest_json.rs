#![no_main]

use embed_audit::embedding_io::ManifestFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = ManifestFile::from_json(text) {
        let _ = file.manifest().validate();
    }
});
