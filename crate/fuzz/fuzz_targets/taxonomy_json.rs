#![no_main]

use embed_audit::taxonomy::{expand_prompts, StatementTaxonomy};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = StatementTaxonomy::from_json(text) {
        assert_eq!(
            expand_prompts(&t).len(),
            t.statements.len() * t.templates.len()
        );
    }
});
