//! Audit report model and its JSON, CSV and Markdown renderings.
//!
//! JSON keys appear in declaration order and every floating-point value is
//! written with 17 significant digits (`d.dddddddddddddddde±x`), so identical
//! inputs give byte-identical files and every value round-trips exactly.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::association::AssociationResult;
use crate::audit::ReportFormat;
use crate::embedding_io::write_bytes;
use crate::error::{Error, Result};
use crate::resampling::{
    observed_vs_null_report, top_k_statements, BootstrapConfig, CategoryResult, ConfidenceInterval,
    Direction, NullCalibration,
};
use crate::taxonomy::StatementKind;

/// Tolerance for recomputing category means from statement rows.
pub const CATEGORY_MEAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: "embed-audit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Fixed descriptions of the estimators, echoed so a report is
/// self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Methods {
    pub similarity: String,
    pub template_averaging: String,
    pub ci_method: String,
    pub percentile: String,
    pub null_model: String,
    pub rng: String,
}

impl Default for Methods {
    fn default() -> Self {
        Self {
            similarity: "dot product of L2-normalized vectors (cosine)".into(),
            template_averaging: "arithmetic mean of normalized template vectors, re-normalized".into(),
            ci_method: "percentile bootstrap; images resampled within each group for statements, statements resampled for categories".into(),
            percentile: "linear interpolation between order statistics (inclusive)".into(),
            null_model: "label swap at original group sizes; mean |bias| over statements, then mean over trials".into(),
            rng: "ChaCha8 substreams keyed by (seed, stream id, counter)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub images: String,
    pub texts: String,
    pub taxonomy: String,
    pub group_a: String,
    pub group_b: String,
    pub bootstrap: BootstrapConfig,
    pub null_trials: usize,
    pub top_k: usize,
    pub methods: Methods,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub image_model_id: String,
    pub text_model_id: String,
    pub dim: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub n_statements: usize,
    pub n_categories: usize,
    pub n_text_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementRow {
    pub statement_id: String,
    pub text: String,
    pub category: String,
    pub kind: StatementKind,
    pub template_count: usize,
    pub bias: f64,
    pub mean_sim_a: f64,
    pub mean_sim_b: f64,
    pub ci: ConfidenceInterval,
    /// Bias divided by the null mean |bias|; absent when the null is degenerate.
    pub null_standardized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedStatement {
    pub rank: usize,
    pub statement_id: String,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopK {
    pub k: usize,
    pub a: Vec<RankedStatement>,
    pub b: Vec<RankedStatement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub tool: ToolInfo,
    pub config: ConfigEcho,
    pub inputs: InputSummary,
    pub statements: Vec<StatementRow>,
    pub categories: Vec<CategoryResult>,
    pub null: NullCalibration,
    pub top_k: TopK,
    pub warnings: Vec<String>,
}

/// Pretty JSON with 17-significant-digit floats.
struct ReportFormatter(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
                self.0.$name(writer)
            }
        )*
    };
}

impl Formatter for ReportFormatter {
    delegate!(
        begin_array,
        end_array,
        end_array_value,
        begin_object,
        end_object,
        begin_object_value,
        end_object_value
    );

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

impl AuditReport {
    pub fn to_json(&self) -> Result<String> {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(
            &mut out,
            ReportFormatter(PrettyFormatter::new()),
        );
        self.serialize(&mut ser)
            .map_err(|e| Error::numeric(format!("cannot encode report: {e}")))?;
        out.push(b'\n');
        Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("malformed report: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// The group label a direction refers to.
    pub fn direction_label(&self, direction: Direction) -> &str {
        match direction {
            Direction::ALeaning => &self.config.group_a,
            Direction::BLeaning => &self.config.group_b,
            Direction::Indeterminate => "indeterminate",
        }
    }

    pub fn association_results(&self) -> Vec<AssociationResult> {
        self.statements
            .iter()
            .map(|s| AssociationResult {
                statement_id: s.statement_id.clone(),
                bias: s.bias,
                mean_sim_a: s.mean_sim_a,
                mean_sim_b: s.mean_sim_b,
            })
            .collect()
    }

    /// Internal-consistency problems: duplicate statements, category means
    /// that do not match their members, direction labels that break the
    /// interval-sign rule, top-k lists that do not match the statement rows.
    pub fn consistency_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut by_category: HashMap<&str, Vec<f64>> = HashMap::new();
        let mut seen = std::collections::HashSet::new();
        for s in &self.statements {
            if !seen.insert(s.statement_id.as_str()) {
                problems.push(format!(
                    "statement {:?} appears more than once",
                    s.statement_id
                ));
            }
            if (s.bias - (s.mean_sim_a - s.mean_sim_b)).abs() > 0.0 {
                problems.push(format!(
                    "statement {:?}: bias differs from mean_sim_a - mean_sim_b",
                    s.statement_id
                ));
            }
            if s.ci.low > s.ci.high {
                problems.push(format!(
                    "statement {:?}: interval low > high",
                    s.statement_id
                ));
            }
            by_category
                .entry(s.category.as_str())
                .or_default()
                .push(s.bias);
        }
        for c in &self.categories {
            match by_category.get(c.category.as_str()) {
                Some(scores) => {
                    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
                    if (mean - c.mean_bias).abs() > CATEGORY_MEAN_TOLERANCE {
                        problems.push(format!(
                            "category {:?}: mean {} differs from member mean {mean}",
                            c.category, c.mean_bias
                        ));
                    }
                    if scores.len() != c.n_statements {
                        problems.push(format!(
                            "category {:?}: statement count mismatch",
                            c.category
                        ));
                    }
                }
                None => problems.push(format!("category {:?} has no statement rows", c.category)),
            }
            if c.direction != Direction::from_interval(c.ci.as_ref()) {
                problems.push(format!(
                    "category {:?}: direction does not follow the interval sign",
                    c.category
                ));
            }
        }
        match top_k_statements(&self.association_results(), self.top_k.k) {
            Ok((a, b)) => {
                let same = |ranked: &[RankedStatement], expected: &[AssociationResult]| {
                    ranked.len() == expected.len()
                        && ranked.iter().zip(expected).all(|(r, e)| {
                            r.statement_id == e.statement_id && r.bias.to_bits() == e.bias.to_bits()
                        })
                };
                if !same(&self.top_k.a, &a) || !same(&self.top_k.b, &b) {
                    problems.push("top-k lists do not match statement rows".into());
                }
            }
            Err(e) => problems.push(format!("top-k: {e}")),
        }
        problems
    }

    pub fn statements_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "statement_id",
            "text",
            "category",
            "kind",
            "template_count",
            "bias",
            "mean_sim_a",
            "mean_sim_b",
            "ci_low",
            "ci_high",
            "null_standardized",
        ])
        .map_err(csv_err)?;
        for s in &self.statements {
            let kind = match s.kind {
                StatementKind::Activity => "activity",
                StatementKind::Occupation => "occupation",
            };
            w.write_record([
                s.statement_id.clone(),
                s.text.clone(),
                s.category.clone(),
                kind.to_string(),
                s.template_count.to_string(),
                s.bias.to_string(),
                s.mean_sim_a.to_string(),
                s.mean_sim_b.to_string(),
                s.ci.low.to_string(),
                s.ci.high.to_string(),
                s.null_standardized
                    .map(|z| z.to_string())
                    .unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        finish_csv(w)
    }

    pub fn categories_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "category",
            "n_statements",
            "mean_bias",
            "ci_low",
            "ci_high",
            "direction",
            "insufficient",
        ])
        .map_err(csv_err)?;
        for c in &self.categories {
            let (low, high) =
                c.ci.map(|ci| (ci.low.to_string(), ci.high.to_string()))
                    .unwrap_or_default();
            w.write_record([
                c.category.clone(),
                c.n_statements.to_string(),
                c.mean_bias.to_string(),
                low,
                high,
                self.direction_label(c.direction).to_string(),
                c.insufficient.to_string(),
            ])
            .map_err(csv_err)?;
        }
        finish_csv(w)
    }

    pub fn to_markdown(&self) -> String {
        let cfg = &self.config;
        let inp = &self.inputs;
        let pct = cfg.bootstrap.confidence * 100.0;
        let mut md = String::new();
        let _ = writeln!(md, "# Association audit\n");
        let _ = writeln!(
            md,
            "Group A = `{}` ({} images), group B = `{}` ({} images). Positive scores lean toward A.\n",
            cfg.group_a, inp.n_a, cfg.group_b, inp.n_b
        );
        let _ = writeln!(
            md,
            "Image model `{}`, text model `{}`, dim {}. {} statements in {} categories. \
             Seed {}, {} resamples, {pct:.0}% percentile intervals, {} null trials.\n",
            inp.image_model_id,
            inp.text_model_id,
            inp.dim,
            inp.n_statements,
            inp.n_categories,
            cfg.bootstrap.seed,
            cfg.bootstrap.resamples,
            cfg.null_trials
        );

        let _ = writeln!(md, "## Category-level association\n");
        let _ = writeln!(md, "| Category | Bias | {pct:.0}% CI | Direction |");
        let _ = writeln!(md, "|---|---:|---|---|");
        for c in &self.categories {
            let ci =
                c.ci.map(|ci| format!("[{:.3}, {:.3}]", ci.low, ci.high))
                    .unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                md,
                "| {} | {:.3} | {ci} | {} |",
                c.category,
                c.mean_bias,
                self.direction_label(c.direction)
            );
        }

        let _ = writeln!(md, "\n## Observed vs. null\n");
        let _ = writeln!(md, "| Model | Observed | Null | Ratio |");
        let _ = writeln!(md, "|---|---:|---:|---:|");
        let null = &self.null;
        for row in observed_vs_null_report([(
            inp.image_model_id.as_str(),
            null.observed_mean_abs_bias,
            null.null_mean_abs_bias,
        )]) {
            let flag = if row.degenerate { " (degenerate)" } else { "" };
            let _ = writeln!(
                md,
                "| {} | {} | {} | {}{flag} |",
                row.model, row.observed, row.null, row.ratio
            );
        }
        let _ = writeln!(
            md,
            "\nNull mean |bias| quantiles over {} trials: q05 {:.4}, q50 {:.4}, q95 {:.4}.",
            null.trials, null.quantiles.q05, null.quantiles.q50, null.quantiles.q95
        );

        let summary = summarize(self);
        let _ = writeln!(md, "\n## Model summary\n");
        let _ = writeln!(
            md,
            "| Model | Avg. Bias | Most {} | Most {} |",
            cfg.group_a, cfg.group_b
        );
        let _ = writeln!(md, "|---|---:|---|---|");
        let _ = writeln!(
            md,
            "| {} | {:.2} | {} | {} |",
            inp.image_model_id,
            summary.avg_abs_bias,
            summary.most_a.as_deref().unwrap_or("n/a"),
            summary.most_b.as_deref().unwrap_or("n/a")
        );

        let texts: HashMap<&str, &str> = self
            .statements
            .iter()
            .map(|s| (s.statement_id.as_str(), s.text.as_str()))
            .collect();
        for (label, list) in [(&cfg.group_a, &self.top_k.a), (&cfg.group_b, &self.top_k.b)] {
            let _ = writeln!(
                md,
                "\n## Top {} `{label}`-leaning statements\n",
                self.top_k.k
            );
            let _ = writeln!(md, "| Rank | Statement | Bias |");
            let _ = writeln!(md, "|---:|---|---:|");
            for r in list {
                let text = texts.get(r.statement_id.as_str()).copied().unwrap_or("");
                let _ = writeln!(md, "| {} | {text} | {:+.4} |", r.rank, r.bias);
            }
        }

        let _ = writeln!(md, "\n## All statements\n");
        let _ = writeln!(md, "| Statement | Category | Bias | {pct:.0}% CI |");
        let _ = writeln!(md, "|---|---|---:|---|");
        for s in &self.statements {
            let _ = writeln!(
                md,
                "| {} | {} | {:+.4} | [{:.4}, {:.4}] |",
                s.text, s.category, s.bias, s.ci.low, s.ci.high
            );
        }

        if !self.warnings.is_empty() {
            let _ = writeln!(md, "\n## Warnings\n");
            for w in &self.warnings {
                let _ = writeln!(md, "- {w}");
            }
        }
        md
    }
}

/// Average |bias| over statements and the categories with the largest and
/// smallest mean bias, formatted like `Domestic labor (+1.18)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub avg_abs_bias: f64,
    pub most_a: Option<String>,
    pub most_b: Option<String>,
}

pub fn summarize(report: &AuditReport) -> ModelSummary {
    let n = report.statements.len().max(1) as f64;
    let avg_abs_bias = report.statements.iter().map(|s| s.bias.abs()).sum::<f64>() / n;
    let pick = |better: fn(f64, f64) -> bool| {
        report
            .categories
            .iter()
            .fold(None::<&CategoryResult>, |best, c| match best {
                Some(b)
                    if !better(c.mean_bias, b.mean_bias)
                        && !(c.mean_bias == b.mean_bias && c.category < b.category) =>
                {
                    Some(b)
                }
                _ => Some(c),
            })
            .map(|c| format!("{} ({:+.2})", c.category, c.mean_bias))
    };
    ModelSummary {
        avg_abs_bias,
        most_a: pick(|x, y| x > y),
        most_b: pick(|x, y| x < y),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::numeric(format!("cannot encode CSV: {e}"))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::numeric(format!("cannot encode CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV built from UTF-8 strings"))
}

/// Renders every requested format and writes the files into `dir`. Nothing
/// is left behind if any write fails.
pub fn write_report(
    report: &AuditReport,
    dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>> {
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    for f in formats {
        match f {
            ReportFormat::Json => files.push((dir.join("report.json"), report.to_json()?)),
            ReportFormat::Csv => {
                files.push((dir.join("statements.csv"), report.statements_csv()?));
                files.push((dir.join("categories.csv"), report.categories_csv()?));
            }
            ReportFormat::Md => files.push((dir.join("report.md"), report.to_markdown())),
        }
    }
    std::fs::create_dir_all(dir).map_err(|source| Error::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for (path, contents) in files {
        if let Err(e) = write_bytes(&path, contents.as_bytes()) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            let _ = std::fs::remove_file(&path);
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}
