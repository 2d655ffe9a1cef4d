//! Runs the checked-in fuzz corpus, plus truncated and byte-flipped variants
//! of every seed, through the same entry points as the fuzz targets.

use std::path::Path;

use embed_audit::embedding_io::{
    decode_embeddings, decode_payload, encode_payload, parse_embedding_csv, EmbeddingMatrix,
    ManifestFile,
};
use embed_audit::report::AuditReport;
use embed_audit::taxonomy::{expand_prompts, StatementTaxonomy};

fn manifest_json(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = ManifestFile::from_json(text) {
        let _ = file.manifest().validate();
    }
}

fn payload_decode(data: &[u8]) {
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
}

fn embedding_pair(data: &[u8]) {
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
}

fn embedding_csv(data: &[u8]) {
    if let Ok((matrix, manifest)) = parse_embedding_csv(data) {
        assert_eq!(matrix.count(), manifest.items.len());
    }
}

fn taxonomy_json(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = StatementTaxonomy::from_json(text) {
        assert_eq!(
            expand_prompts(&t).len(),
            t.statements.len() * t.templates.len()
        );
    }
}

fn report_json(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = AuditReport::from_json(text) {
        let _ = report.consistency_problems();
        let _ = report.to_markdown();
        let _ = report.statements_csv();
        let _ = report.to_json();
    }
}

type Target = (&'static str, fn(&[u8]));

fn run_corpus(target: &str, f: fn(&[u8])) -> usize {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut seeds = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let data = std::fs::read(entry.unwrap().path()).unwrap();
        f(&data);
        let step = (data.len() / 64).max(1);
        for cut in (0..data.len()).step_by(step) {
            f(&data[..cut]);
        }
        for (i, pos) in (0..data.len()).step_by(step).enumerate() {
            let mut mutated = data.clone();
            mutated[pos] ^= 1 << (i % 8);
            f(&mutated);
        }
        seeds += 1;
    }
    seeds
}

#[test]
fn every_corpus_seed_is_handled() {
    let targets: [Target; 6] = [
        ("manifest_json", manifest_json),
        ("payload_decode", payload_decode),
        ("embedding_pair", embedding_pair),
        ("embedding_csv", embedding_csv),
        ("taxonomy_json", taxonomy_json),
        ("report_json", report_json),
    ];
    for (name, f) in targets {
        assert!(run_corpus(name, f) > 0, "no seeds for {name}");
    }
}

#[test]
fn sample_seeds_parse() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let report = std::fs::read_to_string(corpus.join("report_json/sample.json")).unwrap();
    let report = AuditReport::from_json(&report).unwrap();
    assert!(report.consistency_problems().is_empty());
    let pair = std::fs::read(corpus.join("embedding_pair/images")).unwrap();
    let split = pair.iter().position(|&b| b == 0).unwrap();
    let file = ManifestFile::from_json(std::str::from_utf8(&pair[..split]).unwrap()).unwrap();
    assert!(decode_embeddings(&file, &pair[split + 1..]).is_ok());
}
