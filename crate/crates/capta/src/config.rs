//! Project configuration, read from `capta.toml` at the project root.

use std::path::{Path, PathBuf};

use capta_core::corpus::DEFAULT_DATE_PATTERNS;
use capta_core::extraction::DEFAULT_HONORIFICS;
use capta_core::graph::FilterCriterion;
use capta_core::layout::{LabelParams, LayoutParams};
use capta_core::EntityId;
use serde::{Deserialize, Serialize};

pub const CONFIG_FILE: &str = "capta.toml";
/// Overrides the project directory when `--project` is not given.
pub const PROJECT_ENV: &str = "CAPTA_PROJECT";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("invalid config value {field}: {message}")]
    Invalid { field: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub corpus: CorpusConfig,
    pub extraction: ExtractionConfig,
    pub graph: GraphConfig,
    pub communities: CommunityConfig,
    pub layout: LayoutConfig,
    pub export: ExportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Globs relative to the project root; each match is one volume named by its file stem.
    pub files: Vec<String>,
    /// Heading patterns with named `year`, `month` and `day` captures, tried in order.
    pub date_patterns: Vec<String>,
    /// Report gaps longer than this many days; absent disables the check.
    pub max_gap_days: Option<i64>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            files: vec!["corpus/*.txt".into()],
            date_patterns: DEFAULT_DATE_PATTERNS.iter().map(|s| s.to_string()).collect(),
            max_gap_days: Some(31),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub honorifics: Vec<String>,
    pub honorific_candidates: bool,
    pub max_candidate_tokens: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            honorifics: DEFAULT_HONORIFICS.iter().map(|s| s.to_string()).collect(),
            honorific_candidates: true,
            max_candidate_tokens: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    /// Entity ids left out of every network, typically the diarist.
    pub ego: Vec<EntityId>,
    pub window_days: u32,
    pub filter: FilterCriterion,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            ego: Vec::new(),
            window_days: 0,
            filter: FilterCriterion::MinDays(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommunityConfig {
    pub seed: u64,
    pub gamma: f64,
}

impl Default for CommunityConfig {
    fn default() -> Self {
        Self { seed: 0, gamma: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub seed: u64,
    pub forces: LayoutParams,
    pub labels: LabelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Gexf,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    pub formats: Vec<ExportFormat>,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self {
            formats: vec![ExportFormat::Gexf, ExportFormat::Csv],
        }
    }
}

impl ProjectConfig {
    pub fn path(root: &Path) -> PathBuf {
        root.join(CONFIG_FILE)
    }

    /// Load from the project root; a missing file means all defaults.
    pub fn load(root: &Path) -> Result<Self, ConfigError> {
        let path = Self::path(root);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(source) => return Err(ConfigError::Read { path, source }),
        };
        let config: Self = toml::from_str(&text).map_err(|e| ConfigError::Syntax {
            path: path.clone(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, message: &str| {
            Err(ConfigError::Invalid {
                field,
                message: message.into(),
            })
        };
        if self.corpus.files.is_empty() {
            return invalid("corpus.files", "at least one glob is required");
        }
        if self.corpus.date_patterns.is_empty() {
            return invalid("corpus.date_patterns", "at least one pattern is required");
        }
        if let Some(g) = self.corpus.max_gap_days {
            if g < 1 {
                return invalid("corpus.max_gap_days", "must be at least 1");
            }
        }
        if self.extraction.max_candidate_tokens == 0 {
            return invalid("extraction.max_candidate_tokens", "must be at least 1");
        }
        if let FilterCriterion::MinDays(0) = self.graph.filter {
            return invalid("graph.filter", "min_days must be at least 1");
        }
        if !(self.communities.gamma.is_finite() && self.communities.gamma > 0.0) {
            return invalid("communities.gamma", "must be a positive number");
        }
        if let Err(e) = self.layout.forces.validate() {
            return Err(ConfigError::Invalid {
                field: "layout.forces",
                message: e.to_string(),
            });
        }
        let l = &self.layout.labels;
        if !(l.char_width > 0.0 && l.height > 0.0 && l.padding >= 0.0) {
            return invalid("layout.labels", "box dimensions must be positive");
        }
        Ok(())
    }
}
