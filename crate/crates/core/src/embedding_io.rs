//! Portable embedding files.
//!
//! A gallery is stored as two files: a JSON manifest and a raw payload of
//! `count * dim` little-endian `f32` values, row-major, no padding. The
//! manifest names the payload through `data_file`, relative to the manifest's
//! own directory:
//!
//! ```json
//! {
//!   "version": "emba/1",
//!   "role": "image",
//!   "model_id": "ViT-B/32",
//!   "dim": 512,
//!   "count": 220,
//!   "dtype": "f32le",
//!   "normalized": true,
//!   "data_file": "images.bin",
//!   "items": [{ "id": "img-0001", "group": "female" }, ...]
//! }
//! ```
//!
//! Small galleries can also be written by hand as CSV: a header row
//! `id,group,<dim columns...>` for images or
//! `id,statement_id,template_index,<dim columns...>` for text prompts.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "emba/1";
pub const DTYPE_F32LE: &str = "f32le";

/// Rows whose L2 norm is within this distance of 1 count as unit vectors.
pub const NORM_TOLERANCE: f64 = 1e-4;

/// Dense row-major matrix of `f32` embedding rows.
///
/// Immutable once built; cloning is the only way to get a modified copy.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    count: usize,
    data: Vec<f32>,
    normalized: bool,
}

impl EmbeddingMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes,
    /// length mismatches and non-finite entries.
    pub fn new(dim: usize, count: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 || count == 0 {
            return Err(Error::invalid(format!(
                "embedding matrix must be non-empty (dim={dim}, count={count})"
            )));
        }
        let expected = dim
            .checked_mul(count)
            .ok_or_else(|| Error::invalid("embedding matrix shape overflows"))?;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "embedding data has {} values, expected {count}x{dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        let normalized = data
            .chunks_exact(dim)
            .all(|row| (l2_norm(row) - 1.0).abs() <= NORM_TOLERANCE);
        Ok(Self {
            dim,
            count,
            data,
            normalized,
        })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has {} values, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, rows.len(), data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// True iff every row has unit L2 norm within [`NORM_TOLERANCE`].
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, index: usize) -> &[f32] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn row_norm(&self, index: usize) -> f64 {
        l2_norm(self.row(index))
    }

    /// Copies the given rows, in the given order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.count {
                return Err(Error::invalid(format!(
                    "row index {i} out of range for {} rows",
                    self.count
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(self.dim, indices.len(), data)
    }
}

pub(crate) fn l2_norm(row: &[f32]) -> f64 {
    row.iter()
        .map(|&v| f64::from(v) * f64::from(v))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Image,
    Text,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::Image => "image",
            Role::Text => "text",
        })
    }
}

/// One manifest row. Image rows carry `group`; text rows carry
/// `statement_id` and `template_index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statement_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_index: Option<u32>,
}

impl ItemRecord {
    pub fn image(id: impl Into<String>, group: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            group: Some(group.into()),
            statement_id: None,
            template_index: None,
        }
    }

    pub fn text(
        id: impl Into<String>,
        statement_id: impl Into<String>,
        template_index: u32,
    ) -> Self {
        Self {
            id: id.into(),
            group: None,
            statement_id: Some(statement_id.into()),
            template_index: Some(template_index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GalleryManifest {
    pub role: Role,
    pub model_id: String,
    pub items: Vec<ItemRecord>,
    pub dtype_tag: String,
    /// Whether the producer declared the rows unit-norm. Checked by
    /// validation; the loader recomputes the real state from the data.
    pub claims_normalized: bool,
}

impl GalleryManifest {
    pub fn new(role: Role, model_id: impl Into<String>, items: Vec<ItemRecord>) -> Self {
        Self {
            role,
            model_id: model_id.into(),
            items,
            dtype_tag: DTYPE_F32LE.to_string(),
            claims_normalized: false,
        }
    }

    /// Checks id uniqueness, the dtype tag, and that every item carries the
    /// fields its role requires.
    pub fn validate(&self) -> Result<()> {
        if self.dtype_tag != DTYPE_F32LE {
            return Err(Error::invalid(format!(
                "unsupported dtype {:?} (expected {DTYPE_F32LE:?})",
                self.dtype_tag
            )));
        }
        let mut seen = HashSet::with_capacity(self.items.len());
        for (row, item) in self.items.iter().enumerate() {
            if item.id.is_empty() {
                return Err(Error::invalid(format!("item at row {row} has an empty id")));
            }
            if !seen.insert(item.id.as_str()) {
                return Err(Error::invalid(format!("duplicate item id {:?}", item.id)));
            }
            match self.role {
                Role::Image => {
                    if item.statement_id.is_some() || item.template_index.is_some() {
                        return Err(Error::invalid(format!(
                            "image item {:?} must not carry statement fields",
                            item.id
                        )));
                    }
                    match &item.group {
                        Some(g) if !g.is_empty() => {}
                        _ => {
                            return Err(Error::invalid(format!(
                                "image item {:?} has no group label",
                                item.id
                            )))
                        }
                    }
                }
                Role::Text => {
                    if item.group.is_some() {
                        return Err(Error::invalid(format!(
                            "text item {:?} must not carry a group label",
                            item.id
                        )));
                    }
                    match (&item.statement_id, item.template_index) {
                        (Some(s), Some(_)) if !s.is_empty() => {}
                        _ => {
                            return Err(Error::invalid(format!(
                                "text item {:?} needs statement_id and template_index",
                                item.id
                            )))
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// The manifest as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub version: String,
    pub role: Role,
    pub model_id: String,
    pub dim: usize,
    pub count: usize,
    pub dtype: String,
    #[serde(default)]
    pub normalized: bool,
    pub data_file: String,
    pub items: Vec<ItemRecord>,
}

impl ManifestFile {
    /// Parses and validates manifest text. Does not touch the payload.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ManifestFile = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("malformed manifest: {e}")))?;
        if file.version != FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported manifest version {:?} (expected {FORMAT_VERSION:?})",
                file.version
            )));
        }
        if file.dim == 0 || file.count == 0 {
            return Err(Error::invalid("manifest dim and count must be positive"));
        }
        if file.items.len() != file.count {
            return Err(Error::invalid(format!(
                "manifest/matrix count mismatch: {} items for {} rows",
                file.items.len(),
                file.count
            )));
        }
        file.manifest().validate()?;
        Ok(file)
    }

    pub fn manifest(&self) -> GalleryManifest {
        GalleryManifest {
            role: self.role,
            model_id: self.model_id.clone(),
            items: self.items.clone(),
            dtype_tag: self.dtype.clone(),
            claims_normalized: self.normalized,
        }
    }
}

/// Decodes a raw `f32le` payload of exactly `count * dim` values.
pub fn decode_payload(bytes: &[u8], count: usize, dim: usize) -> Result<Vec<f32>> {
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::invalid("payload shape overflows"))?;
    if bytes.len() != expected {
        return Err(Error::invalid(format!(
            "payload size mismatch: {} bytes, expected {expected} ({count}x{dim} f32)",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn encode_payload(matrix: &EmbeddingMatrix) -> Vec<u8> {
    matrix
        .as_slice()
        .iter()
        .flat_map(|v| v.to_le_bytes())
        .collect()
}

/// Combines a parsed manifest with its payload bytes.
pub fn decode_embeddings(
    file: &ManifestFile,
    payload: &[u8],
) -> Result<(EmbeddingMatrix, GalleryManifest)> {
    let data = decode_payload(payload, file.count, file.dim)?;
    let matrix = EmbeddingMatrix::new(file.dim, file.count, data).map_err(|e| match e {
        Error::Invalid(msg) => Error::invalid(with_row_id(&msg, &file.items)),
        other => other,
    })?;
    Ok((matrix, file.manifest()))
}

// "non-finite value at row 3, ..." gets the item id appended.
fn with_row_id(msg: &str, items: &[ItemRecord]) -> String {
    let row = msg
        .strip_prefix("non-finite value at row ")
        .and_then(|rest| rest.split(',').next())
        .and_then(|r| r.parse::<usize>().ok());
    match row.and_then(|r| items.get(r)) {
        Some(item) => format!("{msg} (id {:?})", item.id),
        None => msg.to_string(),
    }
}

/// Loads a gallery from a manifest path, or from a `.csv` file.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<(EmbeddingMatrix, GalleryManifest)> {
    let path = path.as_ref();
    if is_csv(path) {
        let bytes = read_bytes(path)?;
        return parse_embedding_csv(&bytes);
    }
    let text = fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let file = ManifestFile::from_json(&text)?;
    let data_path = resolve_data_path(path, &file.data_file)?;
    let payload = read_bytes(&data_path)?;
    decode_embeddings(&file, &payload)
}

/// Writes the manifest to `path` and the payload next to it, with the same
/// file stem and a `.bin` extension. All checks run before anything is
/// written.
pub fn save_embeddings(
    matrix: &EmbeddingMatrix,
    manifest: &GalleryManifest,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if manifest.items.len() != matrix.count() {
        return Err(Error::invalid(format!(
            "manifest/matrix count mismatch: {} items for {} rows",
            manifest.items.len(),
            matrix.count()
        )));
    }
    manifest.validate()?;
    let data_path = path.with_extension("bin");
    if data_path == path {
        return Err(Error::invalid(format!(
            "manifest path {} collides with its payload file",
            path.display()
        )));
    }
    let data_file = data_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::invalid(format!("bad manifest path {}", path.display())))?
        .to_string();
    let file = ManifestFile {
        version: FORMAT_VERSION.to_string(),
        role: manifest.role,
        model_id: manifest.model_id.clone(),
        dim: matrix.dim(),
        count: matrix.count(),
        dtype: manifest.dtype_tag.clone(),
        normalized: matrix.is_normalized(),
        data_file,
        items: manifest.items.clone(),
    };
    let mut json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::numeric(format!("cannot encode manifest: {e}")))?;
    json.push('\n');
    write_bytes(&data_path, &encode_payload(matrix))?;
    write_bytes(path, json.as_bytes())
}

/// Parses the CSV gallery form. The header decides the role.
pub fn parse_embedding_csv(bytes: &[u8]) -> Result<(EmbeddingMatrix, GalleryManifest)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::invalid(format!("malformed CSV header: {e}")))?
        .clone();
    let fields: Vec<&str> = headers.iter().collect();
    let (role, meta_cols) = match fields.as_slice() {
        ["id", "group", ..] => (Role::Image, 2),
        ["id", "statement_id", "template_index", ..] => (Role::Text, 3),
        _ => {
            return Err(Error::invalid(
                "CSV header must start with `id,group` or `id,statement_id,template_index`",
            ))
        }
    };
    let dim = fields.len() - meta_cols;
    if dim == 0 {
        return Err(Error::invalid("CSV has no embedding columns"));
    }

    let mut items = Vec::new();
    let mut data = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::invalid(format!("malformed CSV row {row}: {e}")))?;
        if record.len() != fields.len() {
            return Err(Error::invalid(format!(
                "CSV row {row} has {} fields, expected {}",
                record.len(),
                fields.len()
            )));
        }
        let item = match role {
            Role::Image => ItemRecord::image(&record[0], &record[1]),
            Role::Text => {
                let template_index = record[2].parse::<u32>().map_err(|_| {
                    Error::invalid(format!(
                        "CSV row {row}: bad template_index {:?}",
                        &record[2]
                    ))
                })?;
                ItemRecord::text(&record[0], &record[1], template_index)
            }
        };
        for col in meta_cols..fields.len() {
            let v = record[col].parse::<f32>().map_err(|_| {
                Error::invalid(format!("CSV row {row}: bad value {:?}", &record[col]))
            })?;
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite value at row {row}, column {} (id {:?})",
                    col - meta_cols,
                    item.id
                )));
            }
            data.push(v);
        }
        items.push(item);
    }
    if items.is_empty() {
        return Err(Error::invalid("CSV has no rows"));
    }
    let matrix = EmbeddingMatrix::new(dim, items.len(), data)?;
    let mut manifest = GalleryManifest::new(role, "csv", items);
    manifest.claims_normalized = matrix.is_normalized();
    manifest.validate()?;
    Ok((matrix, manifest))
}

/// Partitions an image gallery by group label, preserving row order within
/// each group. Exactly two groups with at least two rows each are required.
pub fn split_by_group(
    matrix: &EmbeddingMatrix,
    manifest: &GalleryManifest,
) -> Result<BTreeMap<String, EmbeddingMatrix>> {
    group_indices(matrix, manifest)?
        .into_iter()
        .map(|(label, rows)| Ok((label, matrix.select_rows(&rows)?)))
        .collect()
}

/// Row indices per group label, in manifest order, with the same checks as
/// [`split_by_group`].
pub fn group_indices(
    matrix: &EmbeddingMatrix,
    manifest: &GalleryManifest,
) -> Result<BTreeMap<String, Vec<usize>>> {
    if manifest.role != Role::Image {
        return Err(Error::invalid("group split needs an image manifest"));
    }
    if manifest.items.len() != matrix.count() {
        return Err(Error::invalid(format!(
            "manifest/matrix count mismatch: {} items for {} rows",
            manifest.items.len(),
            matrix.count()
        )));
    }
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (row, item) in manifest.items.iter().enumerate() {
        let label = item
            .group
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("item {:?} has no group label", item.id)))?;
        groups.entry(label.clone()).or_default().push(row);
    }
    if groups.len() != 2 || groups.values().any(|rows| rows.len() < 2) {
        let summary: Vec<String> = groups
            .iter()
            .map(|(g, rows)| format!("{g}={}", rows.len()))
            .collect();
        return Err(Error::invalid(format!(
            "need exactly two groups with ≥2 items, found [{}]",
            summary.join(", ")
        )));
    }
    Ok(groups)
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn resolve_data_path(manifest_path: &Path, data_file: &str) -> Result<PathBuf> {
    let rel = Path::new(data_file);
    if data_file.is_empty() || rel.is_absolute() {
        return Err(Error::invalid(format!(
            "data_file must be a relative path, got {data_file:?}"
        )));
    }
    Ok(manifest_path
        .parent()
        .unwrap_or_else(|| Path::new(""))
        .join(rel))
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}
