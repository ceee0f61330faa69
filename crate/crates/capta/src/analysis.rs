//! Step parameters and the pure computations behind each pipeline step.
//! The service uses the same functions so its answers match the exports.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use capta_core::communities::{louvain, partition_agreement, Partition};
use capta_core::corpus::{
    parse_diary_bytes, validate_corpus, Corpus, CorpusError, DateGrammar, ValidationConfig, ValidationReport,
};
use capta_core::extraction::{extract_mentions, Gazetteer, GazetteerError, Heuristics, Mention, Normalizer};
use capta_core::graph::{
    build_cooccurrence, corpus_stats, day_mentions, filter_graph, mention_frequency, CoocGraph, CorpusStats,
    FilterCriterion, FrequencyHistogram,
};
use capta_core::layout::{fa2_run, resolve_label_overlaps, LabelParams, LayoutError, LayoutParams, Point};
use capta_core::resolution::{build_review_queue, resolve_corpus, AliasTable, EntryResolutions, ReviewItem};
use capta_core::{Digest, EntityId};
use serde::{Deserialize, Serialize};

use crate::config::{ExportFormat, ProjectConfig};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("cannot read corpus file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("no corpus files match {0}")]
    NoMatch(String),
    #[error("bad corpus glob {pattern}: {message}")]
    Glob { pattern: String, message: String },
    #[error("two corpus files share volume id {0}")]
    DuplicateVolume(String),
    #[error("corpus path {0} is outside the project")]
    Outside(PathBuf),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Gazetteer(#[from] GazetteerError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeSource {
    /// Relative to the project root, `/`-separated.
    pub path: String,
    pub volume_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseParams {
    pub volumes: Vec<VolumeSource>,
    pub date_patterns: Vec<String>,
    pub max_gap_days: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractParams {
    pub alias_version: u64,
    pub alias_digest: Digest,
    pub honorifics: Vec<String>,
    pub honorific_candidates: bool,
    pub max_candidate_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolveParams {
    pub alias_version: u64,
    pub alias_digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    pub ego: BTreeSet<EntityId>,
    pub window_days: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub criterion: FilterCriterion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityParams {
    pub seed: u64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutStepParams {
    pub seed: u64,
    pub forces: LayoutParams,
    pub labels: LabelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportParams {
    pub formats: Vec<ExportFormat>,
}

fn has_glob_meta(s: &str) -> bool {
    s.contains(['*', '?', '['])
}

/// Expand the corpus globs into volumes sorted by volume id.
pub fn discover_volumes(root: &Path, config: &ProjectConfig) -> Result<Vec<VolumeSource>, AnalysisError> {
    let mut found: BTreeMap<String, String> = BTreeMap::new();
    for pattern in &config.corpus.files {
        let full = root.join(pattern);
        if !has_glob_meta(pattern) && !full.exists() {
            return Err(AnalysisError::Read {
                path: full,
                source: std::io::Error::from(std::io::ErrorKind::NotFound),
            });
        }
        let paths = glob::glob(&full.to_string_lossy()).map_err(|e| AnalysisError::Glob {
            pattern: pattern.clone(),
            message: e.to_string(),
        })?;
        let mut any = false;
        for entry in paths {
            let path = entry.map_err(|e| AnalysisError::Read {
                path: e.path().to_path_buf(),
                source: std::io::Error::other(e.to_string()),
            })?;
            if !path.is_file() {
                continue;
            }
            any = true;
            let rel = path.strip_prefix(root).map_err(|_| AnalysisError::Outside(path.clone()))?;
            let rel = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            let volume_id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            if let Some(prev) = found.insert(volume_id.clone(), rel.clone()) {
                if prev != rel {
                    return Err(AnalysisError::DuplicateVolume(volume_id));
                }
            }
        }
        if !any {
            return Err(AnalysisError::NoMatch(pattern.clone()));
        }
    }
    Ok(found
        .into_iter()
        .map(|(volume_id, path)| VolumeSource { path, volume_id })
        .collect())
}

pub fn parse_params(root: &Path, config: &ProjectConfig) -> Result<ParseParams, AnalysisError> {
    Ok(ParseParams {
        volumes: discover_volumes(root, config)?,
        date_patterns: config.corpus.date_patterns.clone(),
        max_gap_days: config.corpus.max_gap_days,
    })
}

/// Raw bytes of every volume named in `params`, in order.
pub fn read_volumes(root: &Path, params: &ParseParams) -> Result<Vec<(String, Vec<u8>)>, AnalysisError> {
    params
        .volumes
        .iter()
        .map(|v| {
            let path = root.join(&v.path);
            std::fs::read(&path)
                .map(|b| (v.path.clone(), b))
                .map_err(|source| AnalysisError::Read { path, source })
        })
        .collect()
}

pub fn parse_corpus(
    params: &ParseParams,
    sources: &[(String, Vec<u8>)],
) -> Result<(Corpus, ValidationReport), AnalysisError> {
    let grammar = DateGrammar::new(&params.date_patterns)?;
    let mut volumes = Vec::new();
    for (v, (_, bytes)) in params.volumes.iter().zip(sources) {
        volumes.push((v.volume_id.clone(), parse_diary_bytes(bytes, &v.volume_id, &grammar)?));
    }
    let corpus = Corpus::from_volumes(volumes);
    let report = validate_corpus(
        &corpus,
        &ValidationConfig {
            max_gap_days: params.max_gap_days,
        },
    );
    Ok((corpus, report))
}

pub fn heuristics(params: &ExtractParams) -> Heuristics {
    Heuristics {
        normalizer: Normalizer::new(&params.honorifics),
        honorific_candidates: params.honorific_candidates,
        max_candidate_tokens: params.max_candidate_tokens,
    }
}

pub fn extract_corpus(
    corpus: &Corpus,
    table: &AliasTable,
    params: &ExtractParams,
) -> Result<Vec<Vec<Mention>>, AnalysisError> {
    let rules = heuristics(params);
    let gazetteer = Gazetteer::compile(table.alias_pairs(), &rules.normalizer)?;
    Ok(corpus
        .entries
        .iter()
        .map(|e| extract_mentions(e, &gazetteer, &rules))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub resolutions: Vec<EntryResolutions>,
    pub queue: Vec<ReviewItem>,
    pub names: BTreeMap<EntityId, String>,
}

pub fn resolve_all(corpus: &Corpus, mentions: &[Vec<Mention>], table: &AliasTable) -> Resolved {
    let resolutions = resolve_corpus(mentions, table);
    let queue = build_review_queue(corpus, &resolutions);
    let names = table
        .entities()
        .iter()
        .map(|(id, r)| (id.clone(), r.display_name.clone()))
        .collect();
    Resolved {
        resolutions,
        queue,
        names,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Built {
    pub graph: CoocGraph,
    pub stats: CorpusStats,
    pub histogram: FrequencyHistogram,
}

pub fn build_network(corpus: &Corpus, resolved: &Resolved, params: &BuildParams) -> Built {
    let days = day_mentions(corpus, &resolved.resolutions, &params.ego);
    let graph = build_cooccurrence(&days, params.window_days, &resolved.names);
    let histogram = mention_frequency(&graph);
    Built {
        stats: corpus_stats(&days),
        histogram,
        graph,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filtered {
    pub graph: CoocGraph,
    pub retained: BTreeSet<EntityId>,
}

pub fn filter_network(graph: &CoocGraph, params: &FilterParams) -> Filtered {
    let (graph, retained) = filter_graph(graph, params.criterion);
    Filtered { graph, retained }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Communities {
    pub full: Partition,
    pub filtered: Partition,
    /// Rand index of the filtered partition against the full one over retained nodes.
    pub agreement: Option<f64>,
}

pub fn detect_communities(full: &CoocGraph, filtered: &Filtered, params: &CommunityParams) -> Communities {
    let full_p = louvain(full, params.seed, params.gamma);
    let filtered_p = louvain(&filtered.graph, params.seed, params.gamma);
    let agreement = if filtered.retained.is_empty() {
        None
    } else {
        partition_agreement(&filtered_p.assignment(), &full_p.assignment(), &filtered.retained).ok()
    };
    Communities {
        full: full_p,
        filtered: filtered_p,
        agreement,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Laid {
    pub iterations: u32,
    pub converged: bool,
    pub final_mean_displacement: f64,
    /// Force-layout positions before label adjustment.
    pub raw_positions: BTreeMap<EntityId, Point>,
    pub positions: BTreeMap<EntityId, Point>,
    pub label_passes: usize,
    pub initial_overlaps: usize,
    pub remaining_overlaps: usize,
}

pub fn lay_out(graph: &CoocGraph, params: &LayoutStepParams) -> Result<Laid, AnalysisError> {
    let run = fa2_run(graph, &params.forces, params.seed)?;
    let boxes = graph
        .nodes
        .iter()
        .map(|(id, n)| (id.clone(), params.labels.box_for(&n.display_name)))
        .collect();
    let adjusted = resolve_label_overlaps(&run.positions, &boxes, params.labels.max_passes, params.seed)?;
    Ok(Laid {
        iterations: run.iterations,
        converged: run.converged,
        final_mean_displacement: run.final_mean_displacement,
        raw_positions: run.positions,
        positions: adjusted.positions,
        label_passes: adjusted.overlaps_per_pass.len(),
        initial_overlaps: adjusted.initial_overlaps,
        remaining_overlaps: adjusted.remaining_overlaps,
    })
}
