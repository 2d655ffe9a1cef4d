//! Auxiliary commands: file validation, plot-ready series and cross-report
//! comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::embedding_io::{
    load_embeddings, EmbeddingMatrix, GalleryManifest, Role, NORM_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::report::{summarize, AuditReport};
use crate::taxonomy::StatementTaxonomy;

/// At most this many offending row ids are listed per norm warning.
const MAX_LISTED_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FileStatus {
    Ok,
    Warn,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileCheck {
    pub path: String,
    pub status: FileStatus,
    pub summary: String,
    pub messages: Vec<String>,
}

impl FileCheck {
    pub fn render(&self) -> String {
        let tag = match self.status {
            FileStatus::Ok => "OK",
            FileStatus::Warn => "WARN",
            FileStatus::Error => "ERROR",
        };
        let mut line = format!("{tag} {}", self.path);
        if !self.summary.is_empty() {
            line.push_str(": ");
            line.push_str(&self.summary);
        }
        for m in &self.messages {
            line.push_str("\n  - ");
            line.push_str(m);
        }
        line
    }
}

/// Checks each file independently; one bad file never hides the others.
pub fn validate_paths<P: AsRef<Path>>(paths: &[P]) -> Vec<FileCheck> {
    paths.iter().map(|p| validate_path(p.as_ref())).collect()
}

pub fn validate_path(path: &Path) -> FileCheck {
    let shown = path.display().to_string();
    let outcome = if path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        check_embeddings(path)
    } else {
        match std::fs::read_to_string(path) {
            Err(e) => Err(Error::Read {
                path: path.to_path_buf(),
                source: e,
            }),
            Ok(text) => check_json(path, &text),
        }
    };
    match outcome {
        Ok((summary, warnings)) => FileCheck {
            path: shown,
            status: if warnings.is_empty() {
                FileStatus::Ok
            } else {
                FileStatus::Warn
            },
            summary,
            messages: warnings,
        },
        Err(e) => FileCheck {
            path: shown,
            status: FileStatus::Error,
            summary: e.to_string(),
            messages: Vec::new(),
        },
    }
}

type CheckOutcome = Result<(String, Vec<String>)>;

fn check_json(path: &Path, text: &str) -> CheckOutcome {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("not valid JSON: {e}")))?;
    let version = value
        .get("version")
        .and_then(|v| v.as_str())
        .unwrap_or_default();
    if version.starts_with("emba/") {
        check_embeddings(path)
    } else if version.starts_with("taxonomy/") {
        check_taxonomy(&StatementTaxonomy::from_json(text)?)
    } else if value.get("tool").is_some() && value.get("statements").is_some() {
        check_report(&AuditReport::from_json(text)?)
    } else {
        Err(Error::invalid(
            "unrecognized JSON file (expected an emba manifest, taxonomy or report)",
        ))
    }
}

fn check_embeddings(path: &Path) -> CheckOutcome {
    let (matrix, manifest) = load_embeddings(path)?;
    let mut warnings = Vec::new();
    let mut summary = format!(
        "{} {} model={} count={} dim={}",
        crate::embedding_io::FORMAT_VERSION,
        manifest.role,
        manifest.model_id,
        matrix.count(),
        matrix.dim()
    );

    let off: Vec<(usize, f64)> = (0..matrix.count())
        .map(|r| (r, matrix.row_norm(r)))
        .filter(|(_, n)| (n - 1.0).abs() > NORM_TOLERANCE)
        .collect();
    if off.is_empty() {
        summary.push_str(" norms=unit");
    } else if manifest.claims_normalized {
        let listed: Vec<String> = off
            .iter()
            .take(MAX_LISTED_ROWS)
            .map(|&(r, n)| format!("{} ({n:.6})", manifest.items[r].id))
            .collect();
        let more = off.len().saturating_sub(MAX_LISTED_ROWS);
        let tail = if more > 0 {
            format!(" and {more} more")
        } else {
            String::new()
        };
        warnings.push(format!(
            "norm violation: {} rows claimed normalized are off by more than {NORM_TOLERANCE}: {}{tail}",
            off.len(),
            listed.join(", ")
        ));
    } else {
        summary.push_str(" norms=raw (normalized at audit time)");
    }
    if let Some(&(r, _)) = off
        .iter()
        .find(|&&(_, n)| n <= crate::association::MIN_ROW_NORM)
    {
        return Err(Error::invalid(format!(
            "zero-norm embedding at row {r} (id {:?})",
            manifest.items[r].id
        )));
    }

    match manifest.role {
        Role::Image => check_groups(&matrix, &manifest, &mut summary, &mut warnings)?,
        Role::Text => {
            let mut per_statement: BTreeMap<&str, usize> = BTreeMap::new();
            for item in &manifest.items {
                *per_statement
                    .entry(item.statement_id.as_deref().unwrap_or_default())
                    .or_default() += 1;
            }
            let _ = write!(summary, " statements={}", per_statement.len());
            let min = per_statement.values().min().copied().unwrap_or(0);
            let max = per_statement.values().max().copied().unwrap_or(0);
            if min != max {
                warnings.push(format!(
                    "uneven template coverage: {min} to {max} prompts per statement"
                ));
            }
        }
    }
    Ok((summary, warnings))
}

fn check_groups(
    matrix: &EmbeddingMatrix,
    manifest: &GalleryManifest,
    summary: &mut String,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let groups = crate::embedding_io::group_indices(matrix, manifest)?;
    let counts: Vec<String> = groups
        .iter()
        .map(|(g, r)| format!("{g}:{}", r.len()))
        .collect();
    let _ = write!(summary, " groups={}", counts.join(","));
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    if sizes.windows(2).any(|w| w[0] != w[1]) {
        warnings.push(format!("group imbalance: {}", counts.join(" vs ")));
    }
    Ok(())
}

fn check_taxonomy(t: &StatementTaxonomy) -> CheckOutcome {
    let counts: Vec<String> = t
        .category_members()
        .iter()
        .map(|(c, m)| format!("{c}:{}", m.len()))
        .collect();
    let mut warnings = Vec::new();
    for (c, m) in t.category_members() {
        if m.len() < 2 {
            warnings.push(format!(
                "category {c:?} has fewer than 2 statements; no interval will be reported"
            ));
        }
    }
    Ok((
        format!(
            "{} statements={} templates={} categories=[{}]",
            crate::taxonomy::TAXONOMY_VERSION,
            t.statements.len(),
            t.templates.len(),
            counts.join(", ")
        ),
        warnings,
    ))
}

fn check_report(r: &AuditReport) -> CheckOutcome {
    let problems = r.consistency_problems();
    if !problems.is_empty() {
        return Err(Error::invalid(format!(
            "inconsistent report: {}",
            problems.join("; ")
        )));
    }
    Ok((
        format!(
            "report statements={} categories={} seed={}",
            r.statements.len(),
            r.categories.len(),
            r.config.bootstrap.seed
        ),
        r.warnings.clone(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Category,
    TopK,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "category" => Ok(PlotKind::Category),
            "topk" => Ok(PlotKind::TopK),
            other => Err(Error::invalid(format!(
                "unknown plot kind {other:?} (expected category or topk)"
            ))),
        }
    }
}

/// Tidy CSV series for charting.
///
/// * `category`: `category,mean_bias,ci_low,ci_high`
/// * `topk`: `rank,statement,bias,direction`, group A's list first.
pub fn plot_data(report: &AuditReport, kind: PlotKind) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::numeric(format!("cannot encode CSV: {e}"));
    match kind {
        PlotKind::Category => {
            if report.categories.is_empty() {
                return Err(Error::invalid("report missing categories"));
            }
            w.write_record(["category", "mean_bias", "ci_low", "ci_high"])
                .map_err(enc)?;
            for c in &report.categories {
                let (low, high) =
                    c.ci.map(|ci| (ci.low.to_string(), ci.high.to_string()))
                        .unwrap_or_default();
                w.write_record([c.category.clone(), c.mean_bias.to_string(), low, high])
                    .map_err(enc)?;
            }
        }
        PlotKind::TopK => {
            if report.top_k.a.is_empty() && report.top_k.b.is_empty() {
                return Err(Error::invalid("report missing top-k lists"));
            }
            let texts: BTreeMap<&str, &str> = report
                .statements
                .iter()
                .map(|s| (s.statement_id.as_str(), s.text.as_str()))
                .collect();
            w.write_record(["rank", "statement", "bias", "direction"])
                .map_err(enc)?;
            for (label, list) in [
                (&report.config.group_a, &report.top_k.a),
                (&report.config.group_b, &report.top_k.b),
            ] {
                for r in list {
                    let text = texts
                        .get(r.statement_id.as_str())
                        .copied()
                        .unwrap_or(&r.statement_id);
                    w.write_record([
                        r.rank.to_string(),
                        text.to_string(),
                        r.bias.to_string(),
                        label.clone(),
                    ])
                    .map_err(enc)?;
                }
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::numeric(format!("cannot encode CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV built from UTF-8 strings"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub model: String,
    pub avg_abs_bias: f64,
    pub most_a: String,
    pub most_b: String,
}

/// Per report: mean |bias| over statements and the most A- and B-leaning
/// categories. All reports must share the taxonomy and group labels.
pub fn compare_reports(reports: &[(String, AuditReport)]) -> Result<Vec<CompareRow>> {
    if reports.len() < 2 {
        return Err(Error::invalid("compare needs at least two reports"));
    }
    let shape = |r: &AuditReport| -> Vec<(String, String)> {
        r.statements
            .iter()
            .map(|s| (s.statement_id.clone(), s.category.clone()))
            .collect()
    };
    let (first_name, first) = &reports[0];
    let reference = shape(first);
    for (name, r) in &reports[1..] {
        if shape(r) != reference {
            return Err(Error::invalid(format!(
                "taxonomy mismatch: {name:?} does not share the statements of {first_name:?}"
            )));
        }
        if (&r.config.group_a, &r.config.group_b) != (&first.config.group_a, &first.config.group_b)
        {
            return Err(Error::invalid(format!(
                "group labels of {name:?} differ from {first_name:?}"
            )));
        }
    }
    Ok(reports
        .iter()
        .map(|(name, r)| {
            let s = summarize(r);
            CompareRow {
                model: name.clone(),
                avg_abs_bias: s.avg_abs_bias,
                most_a: s.most_a.unwrap_or_else(|| "n/a".into()),
                most_b: s.most_b.unwrap_or_else(|| "n/a".into()),
            }
        })
        .collect())
}

pub fn render_comparison(rows: &[CompareRow], group_a: &str, group_b: &str) -> String {
    let mut md =
        format!("| Model | Avg. Bias | Most {group_a} | Most {group_b} |\n|---|---:|---|---|\n");
    for r in rows {
        let _ = writeln!(
            md,
            "| {} | {:.2} | {} | {} |",
            r.model, r.avg_abs_bias, r.most_a, r.most_b
        );
    }
    md
}
