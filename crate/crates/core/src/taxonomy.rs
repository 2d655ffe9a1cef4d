//! Statement corpus: statements, their categories and prompt templates.
//!
//! Taxonomy files are JSON:
//!
//! ```json
//! {
//!   "version": "taxonomy/1",
//!   "categories": ["Technical labor", "Domestic labor"],
//!   "templates": ["A person performing {x}", "An occupation that involves {x}", "{x}"],
//!   "statements": [
//!     { "id": "mechanical-engineer", "text": "mechanical engineer",
//!       "category": "Technical labor", "kind": "occupation" }
//!   ]
//! }
//! ```
//!
//! `templates` may be omitted, in which case [`TemplateSet::default`] applies.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TAXONOMY_VERSION: &str = "taxonomy/1";
pub const PLACEHOLDER: &str = "{x}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatementKind {
    Activity,
    Occupation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Statement {
    pub id: String,
    pub text: String,
    pub category: String,
    pub kind: StatementKind,
}

/// Prompt templates, each containing [`PLACEHOLDER`] exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet(Vec<String>);

impl TemplateSet {
    pub fn new(templates: Vec<String>) -> Result<Self> {
        if templates.is_empty() {
            return Err(Error::invalid("template set is empty"));
        }
        for t in &templates {
            match t.matches(PLACEHOLDER).count() {
                0 => return Err(Error::invalid(format!("template missing {{x}}: {t:?}"))),
                1 => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "template has more than one {{x}}: {t:?}"
                    )))
                }
            }
        }
        Ok(Self(templates))
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Fills the placeholder of template `index` with `text`.
    pub fn render(&self, index: usize, text: &str) -> String {
        self.0[index].replacen(PLACEHOLDER, text, 1)
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self(vec![
            "A person performing {x}".to_string(),
            "An occupation that involves {x}".to_string(),
            PLACEHOLDER.to_string(),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementTaxonomy {
    pub statements: Vec<Statement>,
    pub categories: Vec<String>,
    pub templates: TemplateSet,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonomyFile {
    version: String,
    #[serde(default)]
    #[allow(dead_code)]
    description: Option<String>,
    categories: Vec<String>,
    #[serde(default)]
    templates: Option<Vec<String>>,
    statements: Vec<Statement>,
}

impl StatementTaxonomy {
    pub fn new(
        statements: Vec<Statement>,
        categories: Vec<String>,
        templates: TemplateSet,
    ) -> Result<Self> {
        let mut cats = HashSet::new();
        for c in &categories {
            if c.is_empty() {
                return Err(Error::invalid("empty category name"));
            }
            if !cats.insert(c.as_str()) {
                return Err(Error::invalid(format!("duplicate category {c:?}")));
            }
        }
        let mut ids = HashSet::new();
        let mut used = HashSet::new();
        for s in &statements {
            if s.id.is_empty() {
                return Err(Error::invalid("statement with empty id"));
            }
            if s.text.is_empty() {
                return Err(Error::invalid(format!(
                    "statement {:?} has empty text",
                    s.id
                )));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::invalid(format!("duplicate statement id {:?}", s.id)));
            }
            if !cats.contains(s.category.as_str()) {
                return Err(Error::invalid(format!(
                    "statement {:?} references unknown category {:?}",
                    s.id, s.category
                )));
            }
            used.insert(s.category.as_str());
        }
        if let Some(empty) = categories.iter().find(|c| !used.contains(c.as_str())) {
            return Err(Error::invalid(format!(
                "category {empty:?} has no statements"
            )));
        }
        Ok(Self {
            statements,
            categories,
            templates,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TaxonomyFile = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("malformed taxonomy: {e}")))?;
        if file.version != TAXONOMY_VERSION {
            return Err(Error::invalid(format!(
                "unsupported taxonomy version {:?} (expected {TAXONOMY_VERSION:?})",
                file.version
            )));
        }
        let templates = match file.templates {
            Some(t) => TemplateSet::new(t)?,
            None => TemplateSet::default(),
        };
        Self::new(file.statements, file.categories, templates)
    }

    pub fn statement(&self, id: &str) -> Option<&Statement> {
        self.statements.iter().find(|s| s.id == id)
    }

    /// Indices into `statements` for each category, in category order.
    pub fn category_members(&self) -> Vec<(&str, Vec<usize>)> {
        self.categories
            .iter()
            .map(|c| {
                let members = self
                    .statements
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| &s.category == c)
                    .map(|(i, _)| i)
                    .collect();
                (c.as_str(), members)
            })
            .collect()
    }
}

pub fn load_taxonomy(path: impl AsRef<Path>) -> Result<StatementTaxonomy> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    StatementTaxonomy::from_json(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prompt {
    pub statement_id: String,
    pub template_index: u32,
    pub text: String,
}

/// Every (statement, template) prompt, statement-major.
pub fn expand_prompts(taxonomy: &StatementTaxonomy) -> Vec<Prompt> {
    let templates = &taxonomy.templates;
    taxonomy
        .statements
        .iter()
        .flat_map(|s| {
            (0..templates.len()).map(move |t| Prompt {
                statement_id: s.id.clone(),
                template_index: t as u32,
                text: templates.render(t, &s.text),
            })
        })
        .collect()
}
