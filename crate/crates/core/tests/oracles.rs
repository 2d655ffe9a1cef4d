//! Implementation paths checked against independent brute-force oracles.

mod common;

use std::collections::BTreeMap;

use common::*;
use embed_audit::association::{
    average_templates, bias_all, bias_score, similarity_matrix, AssociationResult, StatementVector,
};
use embed_audit::embedding_io::EmbeddingMatrix;
use embed_audit::resampling::{
    bootstrap_category_ci, bootstrap_statement_ci, top_k_statements, BootstrapConfig,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn bias_matches_double_loop_on_random_instances() {
    let mut r = rng(1);
    for _ in 0..100 {
        let dim = r.gen_range(2..=16);
        let (na, nb, ns) = (
            r.gen_range(4..=20),
            r.gen_range(4..=20),
            r.gen_range(1..=50),
        );
        let a = isotropic_gallery(&mut r, dim, na);
        let b = isotropic_gallery(&mut r, dim, nb);
        let statements = random_statements(&mut r, dim, ns);
        let batched = bias_all(&statements, &a, &b).unwrap();
        for (s, res) in statements.iter().zip(&batched) {
            let oracle = naive_bias(&s.vector, &a, &b);
            assert!(
                (res.bias - oracle).abs() <= 1e-6,
                "{} vs {oracle}",
                res.bias
            );
            let scalar = bias_score(s, &a, &b).unwrap();
            assert!((scalar.bias - oracle).abs() <= 1e-9);
            // Batched and scalar paths perform identical arithmetic.
            assert_eq!(scalar, *res);
        }
    }
}

#[test]
fn three_statements_four_plus_four() {
    let mut r = rng(2);
    let a = isotropic_gallery(&mut r, 5, 4);
    let b = isotropic_gallery(&mut r, 5, 4);
    for s in random_statements(&mut r, 5, 3) {
        let got = bias_score(&s, &a, &b).unwrap().bias;
        assert!((got - naive_bias(&s.vector, &a, &b)).abs() <= 1e-9);
    }
}

#[test]
fn similarity_matrix_matches_double_loop() {
    let mut r = rng(3);
    let gallery = isotropic_gallery(&mut r, 9, 7);
    let statements = random_statements(&mut r, 9, 5);
    let sims = similarity_matrix(&statements, &gallery).unwrap();
    for (s, sv) in statements.iter().enumerate() {
        for i in 0..7 {
            let mut d = 0.0;
            for k in 0..9 {
                d += sv.vector[k] * gallery.row(i)[k] as f64;
            }
            assert!((sims.get(s, i) - d).abs() <= 1e-6);
            assert!(sims.get(s, i).abs() <= 1.0 + 1e-6);
        }
    }
}

#[test]
fn statement_equal_to_gallery_row_has_unit_similarity() {
    let mut r = rng(4);
    let gallery = isotropic_gallery(&mut r, 6, 5);
    let s = StatementVector::from_vector("s", gallery.row(3)).unwrap();
    let sims = similarity_matrix(&[s], &gallery).unwrap();
    assert!((sims.get(0, 3) - 1.0).abs() < 1e-6);
}

#[test]
fn hand_computed_template_average() {
    let s = average_templates("s", &[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
    // mean (0.5, 0.5), norm 0.5·√2, so each component is 1/√2.
    assert!((s.vector[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
    assert!((s.vector[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
    assert_eq!(s.template_count, 2);
}

/// Two-dimensional galleries whose similarity to `[1, 0]` is exactly the
/// given cosine (as f32).
fn gallery_with_cosines(cosines: &[f64]) -> (EmbeddingMatrix, Vec<f64>) {
    let rows: Vec<[f32; 2]> = cosines
        .iter()
        .map(|&c| [c as f32, (1.0 - c * c).sqrt() as f32])
        .collect();
    let m = EmbeddingMatrix::from_rows(&rows).unwrap();
    let sims = rows.iter().map(|r| r[0] as f64).collect();
    (m, sims)
}

/// All 3^3 x 3^3 equally likely resample outcomes.
fn enumerate_outcomes(a: &[f64], b: &[f64]) -> BTreeMap<i64, (f64, usize)> {
    let mut atoms = BTreeMap::new();
    let means = |s: &[f64]| {
        let mut out = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out.push((s[i] + s[j] + s[k]) / 3.0);
                }
            }
        }
        out
    };
    for x in means(a) {
        for y in means(b) {
            let v = x - y;
            // Bucket by rounded value so f32 noise does not split atoms.
            let e = atoms.entry((v * 1e6).round() as i64).or_insert((v, 0));
            e.1 += 1;
        }
    }
    atoms
}

/// Generalized inverse CDF and the distance of `p` from both adjacent CDF steps.
fn exact_quantile(atoms: &BTreeMap<i64, (f64, usize)>, p: f64) -> (f64, f64) {
    let total: usize = atoms.values().map(|a| a.1).sum();
    let mut below = 0.0;
    for &(value, count) in atoms.values() {
        let cdf = below + count as f64 / total as f64;
        if cdf >= p {
            return (value, (p - below).min(cdf - p));
        }
        below = cdf;
    }
    unreachable!()
}

#[test]
fn statement_interval_matches_exhaustive_enumeration() {
    let (ga, sa) = gallery_with_cosines(&[0.0, 0.1, 0.2]);
    let (gb, sb) = gallery_with_cosines(&[0.1, 0.2, 0.3]);
    let atoms = enumerate_outcomes(&sa, &sb);
    let (low, margin_low) = exact_quantile(&atoms, 0.025);
    let (high, margin_high) = exact_quantile(&atoms, 0.975);
    // Both tail probabilities sit well inside a CDF plateau, so a large
    // resample count lands on the same atoms.
    assert!(margin_low > 0.01 && margin_high > 0.01);

    let statement = StatementVector::from_vector("s", &[1.0, 0.0]).unwrap();
    let cfg = BootstrapConfig {
        resamples: 20_000,
        confidence: 0.95,
        seed: 99,
    };
    let ci = bootstrap_statement_ci(&statement, &ga, &gb, &cfg).unwrap();
    assert!((ci.low - low).abs() < 1e-6, "{} vs {low}", ci.low);
    assert!((ci.high - high).abs() < 1e-6, "{} vs {high}", ci.high);
    let point = sa.iter().sum::<f64>() / 3.0 - sb.iter().sum::<f64>() / 3.0;
    assert!((ci.point - point).abs() < 1e-12);
}

#[test]
fn category_interval_matches_high_resample_reference() {
    let scores = [0.12, -0.05, 0.30, 0.02, 0.18];
    let results: Vec<AssociationResult> = scores
        .iter()
        .enumerate()
        .map(|(i, &b)| AssociationResult {
            statement_id: format!("s{i}"),
            bias: b,
            mean_sim_a: 0.0,
            mean_sim_b: 0.0,
        })
        .collect();
    // At the default resample count the tail percentile of this lattice
    // distribution wanders by several atoms, so the implementation is run at
    // a high count too and compared with an independently drawn reference.
    let cfg = BootstrapConfig {
        resamples: 200_000,
        confidence: 0.95,
        seed: 5,
    };
    let got = bootstrap_category_ci("c", &results, &cfg).unwrap();

    let mut reference_rng = StdRng::seed_from_u64(12345);
    let mut means: Vec<f64> = (0..1_000_000)
        .map(|_| {
            (0..5)
                .map(|_| scores[reference_rng.gen_range(0..5)])
                .sum::<f64>()
                / 5.0
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let low = quantile_type7(&means, 0.025);
    let high = quantile_type7(&means, 0.975);

    let ci = got.ci.unwrap();
    assert!((ci.low - low).abs() < 0.005, "{} vs {low}", ci.low);
    assert!((ci.high - high).abs() < 0.005, "{} vs {high}", ci.high);
    assert!((got.mean_bias - 0.114).abs() < 1e-12);
}

#[test]
fn top_k_matches_full_sort() {
    let mut r = rng(6);
    let results: Vec<AssociationResult> = (0..50)
        .map(|i| AssociationResult {
            statement_id: format!("s{i:02}"),
            // Coarse values so ties occur.
            bias: (r.gen_range(-20..=20) as f64) / 40.0,
            mean_sim_a: 0.0,
            mean_sim_b: 0.0,
        })
        .collect();
    let (top_a, top_b) = top_k_statements(&results, 25).unwrap();

    let mut keyed: Vec<(f64, String)> = results
        .iter()
        .map(|r| (r.bias, r.statement_id.clone()))
        .collect();
    keyed.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
    let expect_a: Vec<String> = keyed.iter().take(25).map(|k| k.1.clone()).collect();
    keyed.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
    let expect_b: Vec<String> = keyed.iter().take(25).map(|k| k.1.clone()).collect();

    let ids =
        |v: &[AssociationResult]| v.iter().map(|r| r.statement_id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(&top_a), expect_a);
    assert_eq!(ids(&top_b), expect_b);
}
