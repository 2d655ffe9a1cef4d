mod common;

use std::path::{Path, PathBuf};

use common::*;
use embed_audit::audit::{audit, run_audit, AuditConfig, AuditInputs};
use embed_audit::embedding_io::{
    save_embeddings, EmbeddingMatrix, GalleryManifest, ItemRecord, Role,
};
use embed_audit::report::{summarize, AuditReport};
use embed_audit::resampling::{BootstrapConfig, Direction};
use embed_audit::taxonomy::{
    load_taxonomy, Statement, StatementKind, StatementTaxonomy, TemplateSet,
};
use embed_audit::tools::{compare_reports, plot_data, validate_path, FileStatus, PlotKind};
use rand::Rng;

fn workspace_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn small_taxonomy(categories: &[(&str, usize)]) -> StatementTaxonomy {
    let mut statements = Vec::new();
    for (c, n) in categories {
        for i in 0..*n {
            statements.push(Statement {
                id: format!("{}-{i}", c.to_lowercase().replace(' ', "-")),
                text: format!("{c} task {i}"),
                category: c.to_string(),
                kind: StatementKind::Occupation,
            });
        }
    }
    let names = categories.iter().map(|(c, _)| c.to_string()).collect();
    StatementTaxonomy::new(statements, names, TemplateSet::default()).unwrap()
}

fn image_manifest(n_a: usize, n_b: usize) -> GalleryManifest {
    let items = (0..n_a + n_b)
        .map(|i| ItemRecord::image(format!("img{i:03}"), if i < n_a { "m" } else { "f" }))
        .collect();
    GalleryManifest::new(Role::Image, "synthetic", items)
}

/// One text row per (statement, template): the statement direction plus a
/// little template noise.
fn text_gallery(
    rng: &mut impl Rng,
    taxonomy: &StatementTaxonomy,
    directions: &[Vec<f64>],
) -> (EmbeddingMatrix, GalleryManifest) {
    let mut rows = Vec::new();
    let mut items = Vec::new();
    for (s, dir) in taxonomy.statements.iter().zip(directions) {
        for t in 0..taxonomy.templates.len() {
            let g = gaussian(rng, dir.len());
            let v: Vec<f64> = dir.iter().zip(&g).map(|(d, e)| d + 0.05 * e).collect();
            rows.push(to_f32(&unit_f64(&v)));
            items.push(ItemRecord::text(
                format!("{}#{t}", s.id),
                s.id.clone(),
                t as u32,
            ));
        }
    }
    (
        EmbeddingMatrix::from_rows(&rows).unwrap(),
        GalleryManifest::new(Role::Text, "synthetic-text", items),
    )
}

/// Group A images around `+e0`, group B around `-e0`; statement `i` points
/// along `offsets[i] * e0` plus a random direction.
fn leaning_inputs(
    seed: u64,
    taxonomy: StatementTaxonomy,
    offsets: &[f64],
    n: (usize, usize),
) -> AuditInputs {
    let dim = 8;
    let mut r = rng(seed);
    let mut center = vec![0.0; dim];
    center[0] = 0.6;
    let neg: Vec<f64> = center.iter().map(|x| -x).collect();
    let a = gallery(&mut r, &center, 0.5, n.0);
    let b = gallery(&mut r, &neg, 0.5, n.1);
    let directions: Vec<Vec<f64>> = offsets
        .iter()
        .map(|&o| {
            let mut v: Vec<f64> = unit_f64(&gaussian(&mut r, dim))
                .iter()
                .map(|x| x * 0.3)
                .collect();
            v[0] += o;
            v
        })
        .collect();
    let (texts, text_manifest) = text_gallery(&mut r, &taxonomy, &directions);
    AuditInputs {
        images: stack(&a, &b),
        image_manifest: image_manifest(n.0, n.1),
        texts,
        text_manifest,
        taxonomy,
    }
}

fn random_inputs(seed: u64, taxonomy: StatementTaxonomy) -> AuditInputs {
    let offsets: Vec<f64> = {
        let mut r = rng(seed ^ 0xabc);
        (0..taxonomy.statements.len())
            .map(|_| r.gen_range(-0.5..0.5))
            .collect()
    };
    leaning_inputs(seed, taxonomy, &offsets, (12, 12))
}

fn config(seed: u64) -> AuditConfig {
    let mut cfg = AuditConfig::new("images.json", "texts.json", "taxonomy.json", "m", "f");
    cfg.bootstrap = BootstrapConfig {
        resamples: 300,
        confidence: 0.95,
        seed,
    };
    cfg.null_trials = 200;
    cfg.top_k = 5;
    cfg
}

fn two_categories() -> StatementTaxonomy {
    small_taxonomy(&[("Physical labor", 4), ("Emotional labor", 5)])
}

#[test]
fn report_does_not_depend_on_thread_count() {
    let inputs = random_inputs(1, two_categories());
    let cfg = config(42);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| audit(&inputs, &cfg).unwrap().to_json().unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(8));
    assert_eq!(one, run(3));
}

#[test]
fn swapping_groups_flips_every_sign() {
    let inputs = random_inputs(2, two_categories());
    let cfg = config(7);
    let mut swapped_cfg = cfg.clone();
    std::mem::swap(&mut swapped_cfg.group_a, &mut swapped_cfg.group_b);
    let fwd = audit(&inputs, &cfg).unwrap();
    let rev = audit(&inputs, &swapped_cfg).unwrap();

    for (x, y) in fwd.statements.iter().zip(&rev.statements) {
        assert_eq!(x.statement_id, y.statement_id);
        assert_eq!(x.bias, -y.bias);
        assert!((x.ci.low + y.ci.high).abs() <= 1e-12);
        assert!((x.ci.high + y.ci.low).abs() <= 1e-12);
    }
    for (x, y) in fwd.categories.iter().zip(&rev.categories) {
        assert!((x.mean_bias + y.mean_bias).abs() <= 1e-12);
        let (cx, cy) = (x.ci.unwrap(), y.ci.unwrap());
        assert!((cx.low + cy.high).abs() <= 1e-12);
        let flipped = match x.direction {
            Direction::ALeaning => Direction::BLeaning,
            Direction::BLeaning => Direction::ALeaning,
            Direction::Indeterminate => Direction::Indeterminate,
        };
        assert_eq!(y.direction, flipped);
    }
    assert_eq!(
        fwd.null.observed_mean_abs_bias,
        rev.null.observed_mean_abs_bias
    );
    assert_eq!(fwd.null.null_mean_abs_bias, rev.null.null_mean_abs_bias);
    let ids = |v: &[embed_audit::report::RankedStatement]| {
        v.iter().map(|r| r.statement_id.clone()).collect::<Vec<_>>()
    };
    assert_eq!(ids(&fwd.top_k.a), ids(&rev.top_k.b));
    assert_eq!(ids(&fwd.top_k.b), ids(&rev.top_k.a));
}

#[test]
fn identical_galleries_give_exactly_zero_bias() {
    let mut inputs = random_inputs(3, two_categories());
    let half: Vec<usize> = (0..12).collect();
    let a = inputs.images.select_rows(&half).unwrap();
    inputs.images = stack(&a, &a);
    let report = audit(&inputs, &config(1)).unwrap();
    assert!(report.statements.iter().all(|s| s.bias == 0.0));
    assert!(report.categories.iter().all(|c| c.mean_bias == 0.0));
    assert_eq!(report.null.observed_mean_abs_bias, 0.0);
}

#[test]
fn constant_galleries_give_zero_width_intervals() {
    let mut inputs = random_inputs(4, two_categories());
    let mut data = Vec::new();
    for i in 0..24 {
        let mut row = vec![0.0f32; 8];
        row[if i < 12 { 0 } else { 1 }] = 1.0;
        data.extend(row);
    }
    inputs.images = EmbeddingMatrix::new(8, 24, data).unwrap();
    let report = audit(&inputs, &config(1)).unwrap();
    for s in &report.statements {
        assert!(s.ci.width() < 1e-9, "{:?}", s.ci);
        assert!(s.ci.contains(s.bias));
    }
    // Every label swap mixes the two constant vectors, so the null is not
    // degenerate even though the intervals are.
    assert!(!report.null.degenerate);
}

#[test]
fn all_identical_images_give_degenerate_null() {
    let mut inputs = random_inputs(5, two_categories());
    let mut row = vec![0.0f32; 8];
    row[3] = 1.0;
    inputs.images = EmbeddingMatrix::from_rows(&vec![row; 24]).unwrap();
    let report = audit(&inputs, &config(1)).unwrap();
    assert!(report.null.degenerate);
    assert_eq!(report.null.ratio, 1.0);
    assert!(report
        .statements
        .iter()
        .all(|s| s.null_standardized.is_none()));
    assert!(report.warnings.iter().any(|w| w.contains("degenerate")));
}

#[test]
fn zero_norm_row_is_rejected_with_its_id() {
    let mut inputs = random_inputs(6, two_categories());
    let mut data = inputs.images.as_slice().to_vec();
    data[5 * 8..6 * 8].fill(0.0);
    inputs.images = EmbeddingMatrix::new(8, 24, data).unwrap();
    let err = audit(&inputs, &config(1)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("img005"), "{err}");
}

#[test]
fn single_group_is_rejected() {
    let mut inputs = random_inputs(7, two_categories());
    for item in &mut inputs.image_manifest.items {
        item.group = Some("m".into());
    }
    let err = audit(&inputs, &config(1)).unwrap_err();
    assert!(err.to_string().contains("need exactly two groups"), "{err}");
}

#[test]
fn unknown_group_label_is_rejected() {
    let inputs = random_inputs(8, two_categories());
    let mut cfg = config(1);
    cfg.group_b = "x".into();
    let err = audit(&inputs, &cfg).unwrap_err();
    assert!(err.to_string().contains("\"x\" not found"), "{err}");
}

#[test]
fn missing_statement_embeddings_are_rejected() {
    let mut inputs = random_inputs(9, two_categories());
    let keep: Vec<usize> = (3..inputs.texts.count()).collect();
    inputs.texts = inputs.texts.select_rows(&keep).unwrap();
    inputs.text_manifest.items.drain(..3);
    let err = audit(&inputs, &config(1)).unwrap_err();
    assert!(err.to_string().contains("has no text embeddings"), "{err}");
}

#[test]
fn generated_reports_are_internally_consistent() {
    for seed in 0..5 {
        let tax = small_taxonomy(&[("A", 3), ("B", 6), ("C", 2), ("D", 1)]);
        let report = audit(&random_inputs(seed, tax), &config(seed)).unwrap();
        assert_eq!(report.consistency_problems(), Vec::<String>::new());
        assert_eq!(report.statements.len(), 12);
        let d = report
            .categories
            .iter()
            .find(|c| c.category == "D")
            .unwrap();
        assert!(d.insufficient && d.ci.is_none());
        assert_eq!(d.direction, Direction::Indeterminate);

        let text = report.to_json().unwrap();
        let back = AuditReport::from_json(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_json().unwrap(), text);
    }
}

#[test]
fn tampered_report_is_flagged() {
    let mut report = audit(&random_inputs(10, two_categories()), &config(1)).unwrap();
    report.categories[0].mean_bias += 1e-6;
    report.top_k.a.swap(0, 1);
    let problems = report.consistency_problems();
    assert!(problems
        .iter()
        .any(|p| p.contains("differs from member mean")));
    assert!(problems.iter().any(|p| p.contains("top-k")));
}

#[test]
fn imbalanced_groups_warn() {
    let tax = two_categories();
    let offsets = vec![0.0; tax.statements.len()];
    let inputs = leaning_inputs(11, tax, &offsets, (14, 6));
    let report = audit(&inputs, &config(1)).unwrap();
    assert!(report
        .warnings
        .iter()
        .any(|w| w.contains("group imbalance")));
    assert_eq!((report.inputs.n_a, report.inputs.n_b), (14, 6));
}

#[test]
fn occupation_taxonomy_matches_category_sizes() {
    let tax = load_taxonomy(workspace_file("data/taxonomy-occupations.json")).unwrap();
    let sizes: Vec<usize> = tax
        .category_members()
        .iter()
        .map(|(_, m)| m.len())
        .collect();
    assert_eq!(sizes, [33, 33, 34, 33, 33, 34]);
    assert_eq!(tax.statements.len(), 200);
    let act = load_taxonomy(workspace_file("data/taxonomy-activities.json")).unwrap();
    assert_eq!(act.statements.len(), 120);
    assert!(act.category_members().iter().all(|(_, m)| m.len() == 20));
}

#[test]
fn plot_series_have_expected_shape() {
    let report = audit(&random_inputs(12, two_categories()), &config(1)).unwrap();
    let csv = plot_data(&report, PlotKind::Category).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "category,mean_bias,ci_low,ci_high");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("Physical labor,"));

    let mut empty = report.clone();
    empty.categories.clear();
    let err = plot_data(&empty, PlotKind::Category).unwrap_err();
    assert!(err.to_string().contains("report missing categories"));
}

#[test]
fn top_k_series_for_full_occupation_set() {
    let tax = load_taxonomy(workspace_file("data/taxonomy-occupations.json")).unwrap();
    let mut cfg = config(3);
    cfg.top_k = 25;
    cfg.bootstrap.resamples = 100;
    cfg.null_trials = 100;
    let report = audit(&random_inputs(13, tax), &cfg).unwrap();
    let csv = plot_data(&report, PlotKind::TopK).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "rank,statement,bias,direction");
    assert_eq!(lines.len(), 51);
    assert_eq!(lines[1..].iter().filter(|l| l.ends_with(",m")).count(), 25);
    assert_eq!(lines[1..].iter().filter(|l| l.ends_with(",f")).count(), 25);
}

#[test]
fn comparison_of_zero_and_designed_reports() {
    let cats = [("Beta", 3), ("Alpha", 3), ("Gamma", 3)];
    // Beta leans towards A, Gamma towards B.
    let offsets = [0.5, 0.5, 0.5, 0.0, 0.0, 0.0, -0.5, -0.5, -0.5];
    let designed = audit(
        &leaning_inputs(14, small_taxonomy(&cats), &offsets, (12, 12)),
        &config(1),
    )
    .unwrap();

    let mut flat_inputs = leaning_inputs(15, small_taxonomy(&cats), &offsets, (12, 12));
    let half: Vec<usize> = (0..12).collect();
    let a = flat_inputs.images.select_rows(&half).unwrap();
    flat_inputs.images = stack(&a, &a);
    let flat = audit(&flat_inputs, &config(1)).unwrap();

    let rows = compare_reports(&[("designed".into(), designed), ("flat".into(), flat)]).unwrap();
    assert!(rows[0].most_a.starts_with("Beta ("), "{:?}", rows[0]);
    assert!(rows[0].most_b.starts_with("Gamma ("), "{:?}", rows[0]);
    assert!(rows[0].avg_abs_bias > 0.0);
    assert_eq!(rows[1].avg_abs_bias, 0.0);
    assert_eq!(rows[1].most_a, "Alpha (+0.00)");
    assert_eq!(rows[1].most_b, "Alpha (+0.00)");
    let table = embed_audit::tools::render_comparison(&rows, "m", "f");
    assert!(
        table.contains("| flat | 0.00 | Alpha (+0.00) | Alpha (+0.00) |"),
        "{table}"
    );
}

#[test]
fn comparison_rejects_different_taxonomies() {
    let x = audit(&random_inputs(16, two_categories()), &config(1)).unwrap();
    let y = audit(
        &random_inputs(17, small_taxonomy(&[("Physical labor", 4), ("Other", 5)])),
        &config(1),
    )
    .unwrap();
    let err = compare_reports(&[("x".into(), x.clone()), ("y".into(), y)]).unwrap_err();
    assert!(err.to_string().contains("taxonomy mismatch"), "{err}");
    assert!(compare_reports(&[("x".into(), x)]).is_err());
    let s = summarize(&audit(&random_inputs(18, two_categories()), &config(1)).unwrap());
    assert!(s.most_a.is_some());
}

#[test]
fn run_audit_reads_files_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = random_inputs(19, two_categories());
    let images = dir.path().join("images.json");
    let texts = dir.path().join("texts.json");
    save_embeddings(&inputs.images, &inputs.image_manifest, &images).unwrap();
    save_embeddings(&inputs.texts, &inputs.text_manifest, &texts).unwrap();
    let taxonomy = dir.path().join("taxonomy.json");
    std::fs::write(&taxonomy, taxonomy_json(&inputs.taxonomy)).unwrap();

    let mut cfg = config(5);
    cfg.image_path = images;
    cfg.text_path = texts;
    cfg.taxonomy_path = taxonomy;
    let from_disk = run_audit(&cfg).unwrap();
    let in_memory = audit(&inputs, &cfg).unwrap();
    assert_eq!(from_disk, in_memory);
}

fn taxonomy_json(t: &StatementTaxonomy) -> String {
    serde_json::json!({
        "version": "taxonomy/1",
        "categories": t.categories,
        "templates": t.templates.as_slice(),
        "statements": t.statements,
    })
    .to_string()
}

#[test]
fn validate_reports_norm_violations_by_id() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<Vec<f32>> = (0..6).map(|i| vec![1.0, i as f32 * 0.1]).collect();
    let m = EmbeddingMatrix::from_rows(&rows).unwrap();
    let path = dir.path().join("raw.json");
    save_embeddings(&m, &image_manifest(3, 3), &path).unwrap();
    let check = validate_path(&path);
    assert_eq!(check.status, FileStatus::Ok, "{}", check.render());
    assert!(check.summary.contains("norms=raw"));

    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(
        &path,
        text.replace("\"normalized\": false", "\"normalized\": true"),
    )
    .unwrap();
    let check = validate_path(&path);
    assert_eq!(check.status, FileStatus::Warn);
    let rendered = check.render();
    assert!(rendered.contains("norm violation"), "{rendered}");
    assert!(
        rendered.contains("img001") && rendered.contains("img005"),
        "{rendered}"
    );
    assert!(!rendered.contains("img000"), "{rendered}");
}

#[test]
fn validate_warns_on_imbalance() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(20);
    let m = isotropic_gallery(&mut r, 4, 100);
    let path = dir.path().join("images.json");
    save_embeddings(&m, &image_manifest(70, 30), &path).unwrap();
    let check = validate_path(&path);
    assert_eq!(check.status, FileStatus::Warn);
    assert!(
        check.render().contains("group imbalance: f:30 vs m:70"),
        "{}",
        check.render()
    );
}

#[test]
fn validate_accepts_shipped_files() {
    for rel in [
        "fixtures/sample/images.json",
        "fixtures/sample/texts.json",
        "fixtures/sample/images.csv",
        "fixtures/sample/taxonomy.json",
        "data/taxonomy-occupations.json",
        "data/taxonomy-activities.json",
    ] {
        let check = validate_path(&workspace_file(rel));
        assert_eq!(check.status, FileStatus::Ok, "{}", check.render());
    }
}
