#![no_main]

use embed_audit::report::AuditReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = AuditReport::from_json(text) {
        let _ = report.consistency_problems();
        let _ = report.to_markdown();
        let _ = report.statements_csv();
        let _ = report.to_json();
    }
});
