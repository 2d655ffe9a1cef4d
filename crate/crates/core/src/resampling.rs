//! Percentile bootstrap intervals, the label-swap null model and top-k
//! ranking.
//!
//! Resampling never touches embedding vectors: statement intervals and null
//! trials index into cached similarity rows. Each resample or trial draws
//! from its own [`crate::rng::substream`], and results are collected in index
//! order, so output is independent of the worker-thread count.
//!
//! Percentiles use linear interpolation between order statistics (the
//! inclusive definition): for sorted `x[0..n]` and probability `p`, let
//! `h = (n - 1) p`; the value is `x[⌊h⌋] + (h - ⌊h⌋)(x[⌊h⌋ + 1] - x[⌊h⌋])`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{
    mean, similarity_matrix, AssociationResult, SimilarityMatrix, StatementVector,
};
use crate::embedding_io::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng::{stream_id, substream, uniform_index};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const MIN_RESAMPLES: usize = 100;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_NULL_TRIALS: usize = 1000;
pub const MIN_NULL_TRIALS: usize = 100;

/// Null mean |bias| below this is treated as zero and the ratio is pinned to 1.
pub const DEGENERATE_NULL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: DEFAULT_RESAMPLES,
            confidence: DEFAULT_CONFIDENCE,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples < MIN_RESAMPLES {
            return Err(Error::invalid(format!(
                "bootstrap needs at least {MIN_RESAMPLES} resamples, got {}",
                self.resamples
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::invalid(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }

    pub fn low_resample_warning(&self) -> Option<String> {
        (self.resamples < DEFAULT_RESAMPLES).then(|| {
            format!(
                "only {} bootstrap resamples; intervals are noisy below {DEFAULT_RESAMPLES}",
                self.resamples
            )
        })
    }

    fn tail_probabilities(&self) -> (f64, f64) {
        let alpha = 1.0 - self.confidence;
        (alpha / 2.0, 1.0 - alpha / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
    pub point: f64,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, value: f64) -> bool {
        self.low <= value && value <= self.high
    }
}

/// Inclusive linear-interpolation percentile of already sorted data.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
        _ => sorted[lo],
    }
}

fn percentile_bounds(mut samples: Vec<f64>, cfg: &BootstrapConfig) -> (f64, f64) {
    samples.sort_by(f64::total_cmp);
    let (lo, hi) = cfg.tail_probabilities();
    (
        percentile_sorted(&samples, lo),
        percentile_sorted(&samples, hi),
    )
}

/// Substream id for resampling one gallery on behalf of one statement.
/// Keyed by the gallery's label rather than its A/B role, so swapping the
/// roles replays the same draws with the sign flipped.
pub fn gallery_stream(statement_id: &str, gallery_label: &str) -> u64 {
    stream_id("statement-bootstrap", &[statement_id, gallery_label])
}

fn resampled_mean(sims: &[f64], seed: u64, stream: u64, resample: usize) -> f64 {
    let mut rng = substream(seed, stream, resample as u64);
    let n = sims.len();
    let mut sum = 0.0;
    for _ in 0..n {
        sum += sims[uniform_index(&mut rng, n)];
    }
    sum / n as f64
}

/// Percentile interval for one statement, resampling cached similarity rows
/// of each gallery with replacement. `streams` are the substream ids for
/// gallery A and gallery B.
pub fn bootstrap_similarity_ci(
    sims_a: &[f64],
    sims_b: &[f64],
    streams: (u64, u64),
    cfg: &BootstrapConfig,
) -> Result<ConfidenceInterval> {
    cfg.validate()?;
    if sims_a.len() < 2 || sims_b.len() < 2 {
        return Err(Error::invalid(format!(
            "bootstrap needs at least 2 rows per gallery (got {} and {})",
            sims_a.len(),
            sims_b.len()
        )));
    }
    let point = mean(sims_a) - mean(sims_b);
    let samples: Vec<f64> = (0..cfg.resamples)
        .into_par_iter()
        .map(|r| {
            resampled_mean(sims_a, cfg.seed, streams.0, r)
                - resampled_mean(sims_b, cfg.seed, streams.1, r)
        })
        .collect();
    let (low, high) = percentile_bounds(samples, cfg);
    Ok(ConfidenceInterval { low, high, point })
}

/// Percentile interval for one statement's association score, resampling
/// images within each gallery.
pub fn bootstrap_statement_ci(
    statement: &StatementVector,
    gallery_a: &EmbeddingMatrix,
    gallery_b: &EmbeddingMatrix,
    cfg: &BootstrapConfig,
) -> Result<ConfidenceInterval> {
    let one = std::slice::from_ref(statement);
    let sims_a = similarity_matrix(one, gallery_a)?;
    let sims_b = similarity_matrix(one, gallery_b)?;
    let id = statement.statement_id.as_str();
    bootstrap_similarity_ci(
        sims_a.row(0),
        sims_b.row(0),
        (gallery_stream(id, "A"), gallery_stream(id, "B")),
        cfg,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    ALeaning,
    BLeaning,
    Indeterminate,
}

impl Direction {
    /// A-leaning iff the whole interval is above zero, B-leaning iff below.
    pub fn from_interval(ci: Option<&ConfidenceInterval>) -> Self {
        match ci {
            Some(ci) if ci.low > 0.0 => Direction::ALeaning,
            Some(ci) if ci.high < 0.0 => Direction::BLeaning,
            _ => Direction::Indeterminate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryResult {
    pub category: String,
    pub n_statements: usize,
    pub mean_bias: f64,
    /// `None` when the category has fewer than two statements.
    pub ci: Option<ConfidenceInterval>,
    pub direction: Direction,
    pub insufficient: bool,
}

/// Mean association of a category with a percentile interval from
/// resampling its statement scores.
pub fn bootstrap_category_ci(
    category: &str,
    results: &[AssociationResult],
    cfg: &BootstrapConfig,
) -> Result<CategoryResult> {
    cfg.validate()?;
    if results.is_empty() {
        return Err(Error::invalid(format!(
            "category {category:?} has no statements"
        )));
    }
    let scores: Vec<f64> = results.iter().map(|r| r.bias).collect();
    let mean_bias = mean(&scores);
    if scores.len() < 2 {
        return Ok(CategoryResult {
            category: category.to_string(),
            n_statements: scores.len(),
            mean_bias,
            ci: None,
            direction: Direction::Indeterminate,
            insufficient: true,
        });
    }
    let stream = stream_id("category-bootstrap", &[category]);
    let samples: Vec<f64> = (0..cfg.resamples)
        .into_par_iter()
        .map(|r| resampled_mean(&scores, cfg.seed, stream, r))
        .collect();
    let (low, high) = percentile_bounds(samples, cfg);
    let ci = ConfidenceInterval {
        low,
        high,
        point: mean_bias,
    };
    Ok(CategoryResult {
        category: category.to_string(),
        n_statements: scores.len(),
        mean_bias,
        direction: Direction::from_interval(Some(&ci)),
        ci: Some(ci),
        insufficient: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullQuantiles {
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration {
    pub trials: usize,
    pub null_mean_abs_bias: f64,
    pub quantiles: NullQuantiles,
    pub observed_mean_abs_bias: f64,
    pub ratio: f64,
    /// Set when the null mean is effectively zero; `ratio` is then 1.
    pub degenerate: bool,
}

/// `observed / null`, or `(1.0, true)` when the null is below
/// [`DEGENERATE_NULL`].
pub fn observed_null_ratio(observed: f64, null: f64) -> (f64, bool) {
    if null < DEGENERATE_NULL {
        (1.0, true)
    } else {
        (observed / null, false)
    }
}

// Mean over statements of |mean(selected) - mean(rest)|, summing each row in
// ascending column order.
fn mean_abs_bias(pooled: &SimilarityMatrix, selected: &[bool], n_selected: usize) -> f64 {
    let n_rest = pooled.cols() - n_selected;
    let mut total = 0.0;
    for s in 0..pooled.rows() {
        let (mut sum_sel, mut sum_rest) = (0.0, 0.0);
        for (&v, &sel) in pooled.row(s).iter().zip(selected) {
            if sel {
                sum_sel += v;
            } else {
                sum_rest += v;
            }
        }
        total += (sum_sel / n_selected as f64 - sum_rest / n_rest as f64).abs();
    }
    total / pooled.rows() as f64
}

/// Label-swap null over a pooled similarity matrix (statements x pooled
/// images). `in_a[j]` gives the true membership of pooled column `j`.
///
/// Each trial draws a uniform partition at the original group sizes; the
/// trial statistic is the mean over statements of |bias|, and the null mean
/// is the mean of that statistic over trials.
pub fn null_from_similarities(
    pooled: &SimilarityMatrix,
    in_a: &[bool],
    trials: usize,
    seed: u64,
) -> Result<NullCalibration> {
    if trials < MIN_NULL_TRIALS {
        return Err(Error::invalid(format!(
            "null model needs at least {MIN_NULL_TRIALS} trials, got {trials}"
        )));
    }
    if in_a.len() != pooled.cols() {
        return Err(Error::invalid(format!(
            "size mismatch: {} membership flags for {} pooled images",
            in_a.len(),
            pooled.cols()
        )));
    }
    if pooled.rows() == 0 {
        return Err(Error::invalid("null model needs at least one statement"));
    }
    let n = in_a.len();
    let n_a = in_a.iter().filter(|&&x| x).count();
    let n_b = n - n_a;
    if n_a == 0 || n_b == 0 {
        return Err(Error::invalid(format!(
            "size mismatch: both groups need rows (got {n_a} and {n_b})"
        )));
    }

    let observed = mean_abs_bias(pooled, in_a, n_a);

    // Trials sample the smaller group's size so that swapping roles yields the
    // same partitions.
    let k = n_a.min(n_b);
    let stream = stream_id("label-swap-null", &[]);
    let mut stats: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, stream, t as u64);
            let mut order: Vec<usize> = (0..n).collect();
            for i in 0..k {
                let j = i + uniform_index(&mut rng, n - i);
                order.swap(i, j);
            }
            let mut selected = vec![false; n];
            for &j in &order[..k] {
                selected[j] = true;
            }
            mean_abs_bias(pooled, &selected, k)
        })
        .collect();

    let null_mean = mean(&stats);
    stats.sort_by(f64::total_cmp);
    let (ratio, degenerate) = observed_null_ratio(observed, null_mean);
    Ok(NullCalibration {
        trials,
        null_mean_abs_bias: null_mean,
        quantiles: NullQuantiles {
            q05: percentile_sorted(&stats, 0.05),
            q50: percentile_sorted(&stats, 0.50),
            q95: percentile_sorted(&stats, 0.95),
        },
        observed_mean_abs_bias: observed,
        ratio,
        degenerate,
    })
}

/// Label-swap null for a pooled gallery whose first `sizes.0` rows are group
/// A and remaining `sizes.1` rows group B.
pub fn label_swap_null(
    pooled: &EmbeddingMatrix,
    sizes: (usize, usize),
    statements: &[StatementVector],
    trials: usize,
    seed: u64,
) -> Result<NullCalibration> {
    if sizes.0 + sizes.1 != pooled.count() {
        return Err(Error::invalid(format!(
            "size mismatch: {} + {} != {} pooled rows",
            sizes.0,
            sizes.1,
            pooled.count()
        )));
    }
    let sims = similarity_matrix(statements, pooled)?;
    let in_a: Vec<bool> = (0..pooled.count()).map(|j| j < sizes.0).collect();
    null_from_similarities(&sims, &in_a, trials, seed)
}

/// One row of the observed-vs-null table, formatted to two decimals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatioRow {
    pub model: String,
    pub observed: String,
    pub null: String,
    pub ratio: String,
    pub degenerate: bool,
}

pub fn observed_vs_null_report<'a, I>(models: I) -> Vec<RatioRow>
where
    I: IntoIterator<Item = (&'a str, f64, f64)>,
{
    models
        .into_iter()
        .map(|(model, observed, null)| {
            let (ratio, degenerate) = observed_null_ratio(observed, null);
            RatioRow {
                model: model.to_string(),
                observed: format!("{observed:.2}"),
                null: format!("{null:.2}"),
                ratio: format!("{ratio:.2}"),
                degenerate,
            }
        })
        .collect()
}

/// The `k` most A-leaning statements (descending) and the `k` most
/// B-leaning (ascending). Ties go to the lexicographically smaller id.
pub fn top_k_statements(
    results: &[AssociationResult],
    k: usize,
) -> Result<(Vec<AssociationResult>, Vec<AssociationResult>)> {
    if k == 0 || k > results.len() {
        return Err(Error::invalid(format!(
            "top-k needs 1 <= k <= {} statements, got k={k}",
            results.len()
        )));
    }
    let mut by_a = results.to_vec();
    by_a.sort_by(|x, y| {
        y.bias
            .total_cmp(&x.bias)
            .then_with(|| x.statement_id.cmp(&y.statement_id))
    });
    let mut by_b = results.to_vec();
    by_b.sort_by(|x, y| {
        x.bias
            .total_cmp(&y.bias)
            .then_with(|| x.statement_id.cmp(&y.statement_id))
    });
    by_a.truncate(k);
    by_b.truncate(k);
    Ok((by_a, by_b))
}
