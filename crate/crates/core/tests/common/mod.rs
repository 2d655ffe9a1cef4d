#![allow(dead_code)]

use embed_audit::association::StatementVector;
use embed_audit::embedding_io::EmbeddingMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn unit_f64(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

pub fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

/// `count` rows of `center + noise * N(0, I)`, normalized, as `f32`.
pub fn gallery(rng: &mut impl Rng, center: &[f64], noise: f64, count: usize) -> EmbeddingMatrix {
    let rows: Vec<Vec<f32>> = (0..count)
        .map(|_| {
            let g = gaussian(rng, center.len());
            let v: Vec<f64> = center.iter().zip(&g).map(|(c, e)| c + noise * e).collect();
            to_f32(&unit_f64(&v))
        })
        .collect();
    EmbeddingMatrix::from_rows(&rows).unwrap()
}

pub fn isotropic_gallery(rng: &mut impl Rng, dim: usize, count: usize) -> EmbeddingMatrix {
    gallery(rng, &vec![0.0; dim], 1.0, count)
}

pub fn random_statements(rng: &mut impl Rng, dim: usize, count: usize) -> Vec<StatementVector> {
    (0..count)
        .map(|i| {
            StatementVector::from_vector(format!("s{i:03}"), &to_f32(&gaussian(rng, dim))).unwrap()
        })
        .collect()
}

/// Stacks two matrices row-wise.
pub fn stack(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> EmbeddingMatrix {
    let mut data = a.as_slice().to_vec();
    data.extend_from_slice(b.as_slice());
    EmbeddingMatrix::new(a.dim(), a.count() + b.count(), data).unwrap()
}

/// Association score evaluated by a plain double loop, independent of the library.
#[allow(clippy::needless_range_loop)]
pub fn naive_bias(t: &[f64], a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> f64 {
    let mean_dot = |g: &EmbeddingMatrix| {
        let mut total = 0.0;
        for i in 0..g.count() {
            let mut d = 0.0;
            for k in 0..g.dim() {
                d += t[k] * g.as_slice()[i * g.dim() + k] as f64;
            }
            total += d;
        }
        total / g.count() as f64
    };
    mean_dot(a) - mean_dot(b)
}

/// Inclusive linear-interpolation quantile, written out independently.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pooled gallery for null-model experiments: `n_a` rows then `n_b` rows.
/// With `separation == 0` every row is isotropic; otherwise the groups sit at
/// `±u/2` for a random `u` of norm `separation`, plus isotropic `noise`.
pub fn null_dataset(
    rng: &mut impl Rng,
    dim: usize,
    (n_a, n_b): (usize, usize),
    separation: f64,
    noise: f64,
    statements: usize,
) -> (EmbeddingMatrix, Vec<StatementVector>) {
    let pooled = if separation == 0.0 {
        isotropic_gallery(rng, dim, n_a + n_b)
    } else {
        let u: Vec<f64> = unit_f64(&gaussian(rng, dim))
            .iter()
            .map(|x| x * separation / 2.0)
            .collect();
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let a = gallery(rng, &u, noise, n_a);
        let b = gallery(rng, &neg, noise, n_b);
        stack(&a, &b)
    };
    let statements = random_statements(rng, dim, statements);
    (pooled, statements)
}
