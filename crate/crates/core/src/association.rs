//! Geometry of the association score.
//!
//! For a statement vector `t` and unit-norm galleries `A` and `B`,
//! `bias(t) = mean_i(t·a_i) - mean_j(t·b_j)`. Positive values lean toward
//! gallery `A`.
//!
//! All accumulation is in `f64`, in ascending index order, so results are
//! reproducible bit-for-bit and the batched and scalar paths agree exactly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::embedding_io::{l2_norm, EmbeddingMatrix, GalleryManifest, Role};
use crate::error::{Error, Result};
use crate::taxonomy::StatementTaxonomy;

/// Rows with a norm at or below this are treated as zero vectors.
pub const MIN_ROW_NORM: f64 = 1e-12;

/// Template means with a norm below this are rejected as cancelled out.
pub const MIN_MEAN_NORM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroNormRow {
    pub row: usize,
}

/// Scales every row to unit L2 norm.
pub fn l2_normalize(matrix: &EmbeddingMatrix) -> Result<EmbeddingMatrix, ZeroNormRow> {
    let mut data = Vec::with_capacity(matrix.as_slice().len());
    for (row, values) in matrix.rows().enumerate() {
        let norm = l2_norm(values);
        if norm <= MIN_ROW_NORM {
            return Err(ZeroNormRow { row });
        }
        data.extend(values.iter().map(|&v| (f64::from(v) / norm) as f32));
    }
    Ok(EmbeddingMatrix::new(matrix.dim(), matrix.count(), data)
        .expect("normalizing a valid matrix keeps it valid"))
}

/// [`l2_normalize`] with zero-norm rows reported by manifest id.
pub fn normalize_gallery(
    matrix: &EmbeddingMatrix,
    manifest: &GalleryManifest,
) -> Result<EmbeddingMatrix> {
    l2_normalize(matrix).map_err(|ZeroNormRow { row }| {
        let id = manifest
            .items
            .get(row)
            .map(|i| i.id.as_str())
            .unwrap_or("?");
        Error::invalid(format!("zero-norm embedding at row {row} (id {id:?})"))
    })
}

/// One unit text vector per statement.
#[derive(Debug, Clone, PartialEq)]
pub struct StatementVector {
    pub statement_id: String,
    pub vector: Vec<f64>,
    pub template_count: usize,
}

impl StatementVector {
    /// Wraps a single vector, normalizing it.
    pub fn from_vector(statement_id: impl Into<String>, vector: &[f32]) -> Result<Self> {
        average_templates(statement_id, &[vector])
    }
}

/// Arithmetic mean of the per-template vectors, re-normalized to unit length.
pub fn average_templates(
    statement_id: impl Into<String>,
    per_template: &[&[f32]],
) -> Result<StatementVector> {
    let statement_id = statement_id.into();
    let first = per_template.first().ok_or_else(|| {
        Error::invalid(format!(
            "statement {statement_id:?} has no template vectors"
        ))
    })?;
    let dim = first.len();
    let mut mean = vec![0.0f64; dim];
    for v in per_template {
        if v.len() != dim {
            return Err(Error::invalid(format!(
                "statement {statement_id:?}: template vectors differ in dimension"
            )));
        }
        for (m, &x) in mean.iter_mut().zip(v.iter()) {
            *m += f64::from(x);
        }
    }
    let n = per_template.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    let norm = mean.iter().map(|m| m * m).sum::<f64>().sqrt();
    if norm < MIN_MEAN_NORM {
        return Err(Error::numeric(format!(
            "statement {statement_id:?}: template vectors cancel out (mean norm {norm:e})"
        )));
    }
    mean.iter_mut().for_each(|m| *m /= norm);
    Ok(StatementVector {
        statement_id,
        vector: mean,
        template_count: per_template.len(),
    })
}

/// Groups normalized text rows by statement and averages their templates,
/// in taxonomy order. Templates are averaged in ascending template index.
pub fn statement_vectors(
    texts: &EmbeddingMatrix,
    manifest: &GalleryManifest,
    taxonomy: &StatementTaxonomy,
) -> Result<Vec<StatementVector>> {
    if manifest.role != Role::Text {
        return Err(Error::invalid("text embeddings must have role \"text\""));
    }
    let mut rows: HashMap<&str, Vec<(u32, usize)>> = HashMap::new();
    for (row, item) in manifest.items.iter().enumerate() {
        let sid = item.statement_id.as_deref().unwrap_or_default();
        if taxonomy.statement(sid).is_none() {
            return Err(Error::invalid(format!(
                "text item {:?} references statement {sid:?} not in the taxonomy",
                item.id
            )));
        }
        rows.entry(sid)
            .or_default()
            .push((item.template_index.unwrap_or_default(), row));
    }
    taxonomy
        .statements
        .iter()
        .map(|s| {
            let mut entries = rows.remove(s.id.as_str()).ok_or_else(|| {
                Error::invalid(format!("statement {:?} has no text embeddings", s.id))
            })?;
            entries.sort_unstable();
            if entries.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid(format!(
                    "statement {:?} has duplicate template indices",
                    s.id
                )));
            }
            let vectors: Vec<&[f32]> = entries.iter().map(|&(_, r)| texts.row(r)).collect();
            average_templates(s.id.clone(), &vectors)
        })
        .collect()
}

/// Row-major `statements x gallery` matrix of dot products.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, statement: usize) -> &[f64] {
        &self.data[statement * self.cols..(statement + 1) * self.cols]
    }

    pub fn get(&self, statement: usize, item: usize) -> f64 {
        self.data[statement * self.cols + item]
    }
}

/// Similarities of every statement against gallery `A` and gallery `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrices {
    pub a: SimilarityMatrix,
    pub b: SimilarityMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationResult {
    pub statement_id: String,
    pub bias: f64,
    pub mean_sim_a: f64,
    pub mean_sim_b: f64,
}

#[inline]
fn dot(t: &[f64], v: &[f32]) -> f64 {
    t.iter().zip(v).map(|(&a, &b)| a * f64::from(b)).sum()
}

/// Sum in ascending order divided by the count.
#[inline]
pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn check_dims(statements: &[StatementVector], gallery: &EmbeddingMatrix) -> Result<()> {
    match statements.iter().find(|s| s.vector.len() != gallery.dim()) {
        Some(s) => Err(Error::invalid(format!(
            "dimension mismatch: statement {:?} has dim {}, gallery has dim {}",
            s.statement_id,
            s.vector.len(),
            gallery.dim()
        ))),
        None => Ok(()),
    }
}

pub fn similarity_matrix(
    statements: &[StatementVector],
    gallery: &EmbeddingMatrix,
) -> Result<SimilarityMatrix> {
    check_dims(statements, gallery)?;
    let mut data = Vec::with_capacity(statements.len() * gallery.count());
    for s in statements {
        data.extend(gallery.rows().map(|v| dot(&s.vector, v)));
    }
    Ok(SimilarityMatrix {
        rows: statements.len(),
        cols: gallery.count(),
        data,
    })
}

pub fn similarity_matrices(
    statements: &[StatementVector],
    gallery_a: &EmbeddingMatrix,
    gallery_b: &EmbeddingMatrix,
) -> Result<SimilarityMatrices> {
    Ok(SimilarityMatrices {
        a: similarity_matrix(statements, gallery_a)?,
        b: similarity_matrix(statements, gallery_b)?,
    })
}

/// Association score for one statement, computed directly from the vectors.
pub fn bias_score(
    statement: &StatementVector,
    gallery_a: &EmbeddingMatrix,
    gallery_b: &EmbeddingMatrix,
) -> Result<AssociationResult> {
    let statements = std::slice::from_ref(statement);
    check_dims(statements, gallery_a)?;
    check_dims(statements, gallery_b)?;
    let sims_a: Vec<f64> = gallery_a
        .rows()
        .map(|v| dot(&statement.vector, v))
        .collect();
    let sims_b: Vec<f64> = gallery_b
        .rows()
        .map(|v| dot(&statement.vector, v))
        .collect();
    Ok(result_from_rows(&statement.statement_id, &sims_a, &sims_b))
}

fn result_from_rows(statement_id: &str, sims_a: &[f64], sims_b: &[f64]) -> AssociationResult {
    let mean_sim_a = mean(sims_a);
    let mean_sim_b = mean(sims_b);
    AssociationResult {
        statement_id: statement_id.to_string(),
        bias: mean_sim_a - mean_sim_b,
        mean_sim_a,
        mean_sim_b,
    }
}

/// Scores from precomputed similarity rows; `statements` supplies the ids.
pub fn bias_from_similarities(
    statements: &[StatementVector],
    sims: &SimilarityMatrices,
) -> Vec<AssociationResult> {
    statements
        .iter()
        .enumerate()
        .map(|(s, sv)| result_from_rows(&sv.statement_id, sims.a.row(s), sims.b.row(s)))
        .collect()
}

pub fn bias_all(
    statements: &[StatementVector],
    gallery_a: &EmbeddingMatrix,
    gallery_b: &EmbeddingMatrix,
) -> Result<Vec<AssociationResult>> {
    let sims = similarity_matrices(statements, gallery_a, gallery_b)?;
    Ok(bias_from_similarities(statements, &sims))
}
