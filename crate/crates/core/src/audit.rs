//! End-to-end audit: load galleries and taxonomy, score every statement,
//! attach intervals, aggregate categories, calibrate against the null.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::association::{
    bias_from_similarities, normalize_gallery, similarity_matrices, similarity_matrix,
    statement_vectors,
};
use crate::embedding_io::{group_indices, load_embeddings, EmbeddingMatrix, GalleryManifest, Role};
use crate::error::{Error, Result};
use crate::report::{
    AuditReport, ConfigEcho, InputSummary, Methods, RankedStatement, StatementRow, ToolInfo, TopK,
};
use crate::resampling::{
    bootstrap_category_ci, bootstrap_similarity_ci, gallery_stream, null_from_similarities,
    top_k_statements, BootstrapConfig, DEFAULT_NULL_TRIALS,
};
use crate::taxonomy::{load_taxonomy, StatementTaxonomy};

pub const DEFAULT_TOP_K: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReportFormat {
    Json,
    Csv,
    Md,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Md),
            other => Err(Error::invalid(format!("unknown report format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuditConfig {
    pub image_path: PathBuf,
    pub text_path: PathBuf,
    pub taxonomy_path: PathBuf,
    /// Label of the gallery whose association counts as positive.
    pub group_a: String,
    pub group_b: String,
    pub bootstrap: BootstrapConfig,
    pub null_trials: usize,
    pub top_k: usize,
    pub output_dir: PathBuf,
    pub formats: Vec<ReportFormat>,
}

impl AuditConfig {
    pub fn new(
        image_path: impl Into<PathBuf>,
        text_path: impl Into<PathBuf>,
        taxonomy_path: impl Into<PathBuf>,
        group_a: impl Into<String>,
        group_b: impl Into<String>,
    ) -> Self {
        Self {
            image_path: image_path.into(),
            text_path: text_path.into(),
            taxonomy_path: taxonomy_path.into(),
            group_a: group_a.into(),
            group_b: group_b.into(),
            bootstrap: BootstrapConfig::default(),
            null_trials: DEFAULT_NULL_TRIALS,
            top_k: DEFAULT_TOP_K,
            output_dir: PathBuf::from("."),
            formats: vec![ReportFormat::Json],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.group_a == self.group_b {
            return Err(Error::invalid(format!(
                "group A and group B must differ (both {:?})",
                self.group_a
            )));
        }
        if self.top_k == 0 {
            return Err(Error::invalid("top-k must be positive"));
        }
        self.bootstrap.validate()
    }
}

/// Everything an audit reads from disk.
#[derive(Debug, Clone)]
pub struct AuditInputs {
    pub images: EmbeddingMatrix,
    pub image_manifest: GalleryManifest,
    pub texts: EmbeddingMatrix,
    pub text_manifest: GalleryManifest,
    pub taxonomy: StatementTaxonomy,
}

impl AuditInputs {
    pub fn load(cfg: &AuditConfig) -> Result<Self> {
        let (images, image_manifest) = load_embeddings(&cfg.image_path)?;
        let (texts, text_manifest) = load_embeddings(&cfg.text_path)?;
        let taxonomy = load_taxonomy(&cfg.taxonomy_path)?;
        Ok(Self {
            images,
            image_manifest,
            texts,
            text_manifest,
            taxonomy,
        })
    }
}

pub fn run_audit(cfg: &AuditConfig) -> Result<AuditReport> {
    cfg.validate()?;
    let inputs = AuditInputs::load(cfg)?;
    audit(&inputs, cfg)
}

pub fn audit(inputs: &AuditInputs, cfg: &AuditConfig) -> Result<AuditReport> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    warnings.extend(cfg.bootstrap.low_resample_warning());

    if inputs.image_manifest.role != Role::Image {
        return Err(Error::invalid("image embeddings must have role \"image\""));
    }
    let groups = group_indices(&inputs.images, &inputs.image_manifest)?;
    for label in [&cfg.group_a, &cfg.group_b] {
        if !groups.contains_key(label) {
            let found: Vec<&str> = groups.keys().map(String::as_str).collect();
            return Err(Error::invalid(format!(
                "group {label:?} not found in image manifest (groups: {})",
                found.join(", ")
            )));
        }
    }
    let rows_a = &groups[&cfg.group_a];
    let rows_b = &groups[&cfg.group_b];
    if rows_a.len() != rows_b.len() {
        warnings.push(format!(
            "group imbalance: {} {:?} vs {} {:?} images",
            rows_a.len(),
            cfg.group_a,
            rows_b.len(),
            cfg.group_b
        ));
    }

    let pooled = normalize_gallery(&inputs.images, &inputs.image_manifest)?;
    let gallery_a = pooled.select_rows(rows_a)?;
    let gallery_b = pooled.select_rows(rows_b)?;
    let mut in_a = vec![false; pooled.count()];
    rows_a.iter().for_each(|&r| in_a[r] = true);

    let texts = normalize_gallery(&inputs.texts, &inputs.text_manifest)?;
    let statements = statement_vectors(&texts, &inputs.text_manifest, &inputs.taxonomy)?;
    if texts.dim() != pooled.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: text embeddings have dim {}, image embeddings have dim {}",
            texts.dim(),
            pooled.dim()
        )));
    }

    let sims = similarity_matrices(&statements, &gallery_a, &gallery_b)?;
    let results = bias_from_similarities(&statements, &sims);

    let intervals = statements
        .par_iter()
        .enumerate()
        .map(|(s, sv)| {
            let id = sv.statement_id.as_str();
            bootstrap_similarity_ci(
                sims.a.row(s),
                sims.b.row(s),
                (
                    gallery_stream(id, &cfg.group_a),
                    gallery_stream(id, &cfg.group_b),
                ),
                &cfg.bootstrap,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut categories = Vec::new();
    for (category, members) in inputs.taxonomy.category_members() {
        let member_results: Vec<_> = members.iter().map(|&i| results[i].clone()).collect();
        let result = bootstrap_category_ci(category, &member_results, &cfg.bootstrap)?;
        if result.insufficient {
            warnings.push(format!(
                "category {category:?} has fewer than 2 statements; no interval reported"
            ));
        }
        categories.push(result);
    }

    let pooled_sims = similarity_matrix(&statements, &pooled)?;
    let null = null_from_similarities(&pooled_sims, &in_a, cfg.null_trials, cfg.bootstrap.seed)?;
    if null.degenerate {
        warnings.push(
            "null model is degenerate (no variation across images); ratio pinned to 1".into(),
        );
    }

    let k = cfg.top_k.min(results.len());
    if k < cfg.top_k {
        warnings.push(format!(
            "top-k reduced from {} to {k} (number of statements)",
            cfg.top_k
        ));
    }
    let (top_a, top_b) = top_k_statements(&results, k)?;
    let ranked = |list: Vec<crate::association::AssociationResult>| {
        list.into_iter()
            .enumerate()
            .map(|(i, r)| RankedStatement {
                rank: i + 1,
                statement_id: r.statement_id,
                bias: r.bias,
            })
            .collect()
    };

    let rows = inputs
        .taxonomy
        .statements
        .iter()
        .zip(&statements)
        .zip(results.iter().zip(intervals))
        .map(|((st, sv), (r, ci))| StatementRow {
            statement_id: st.id.clone(),
            text: st.text.clone(),
            category: st.category.clone(),
            kind: st.kind,
            template_count: sv.template_count,
            bias: r.bias,
            mean_sim_a: r.mean_sim_a,
            mean_sim_b: r.mean_sim_b,
            ci,
            null_standardized: (!null.degenerate).then(|| r.bias / null.null_mean_abs_bias),
        })
        .collect();

    Ok(AuditReport {
        tool: ToolInfo::current(),
        config: ConfigEcho {
            images: display(&cfg.image_path),
            texts: display(&cfg.text_path),
            taxonomy: display(&cfg.taxonomy_path),
            group_a: cfg.group_a.clone(),
            group_b: cfg.group_b.clone(),
            bootstrap: cfg.bootstrap,
            null_trials: cfg.null_trials,
            top_k: cfg.top_k,
            methods: Methods::default(),
        },
        inputs: InputSummary {
            image_model_id: inputs.image_manifest.model_id.clone(),
            text_model_id: inputs.text_manifest.model_id.clone(),
            dim: pooled.dim(),
            n_a: rows_a.len(),
            n_b: rows_b.len(),
            n_statements: statements.len(),
            n_categories: inputs.taxonomy.categories.len(),
            n_text_rows: texts.count(),
        },
        statements: rows,
        categories,
        null,
        top_k: TopK {
            k,
            a: ranked(top_a),
            b: ranked(top_b),
        },
        warnings,
    })
}

fn display(path: &Path) -> String {
    path.display().to_string()
}
