//! Step execution with provenance. `run` and `replay` share one engine: a
//! step is a pure function of its recorded parameters and the outputs of the
//! steps it depends on, so replaying the ledger re-derives every artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use capta_core::corpus::{Corpus, ValidationReport};
use capta_core::digest::canonical_bytes;
use capta_core::extraction::Mention;
use capta_core::provenance::{digest_named, Ledger, LedgerError, RecordBody, StepKind};
use capta_core::resolution::{AliasTable, DecisionLog, DecisionLogError};
use capta_core::Digest;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::analysis::{self, *};
use crate::config::ExportFormat;
use crate::gexf::{write_gexf, GexfDocument, GexfError};
use crate::project::{append_record, now_timestamp, write_atomic, Project, StoreError};
use crate::tables;

/// Steps of a full run, in order.
pub const PIPELINE: [StepKind; 8] = [
    StepKind::Parse,
    StepKind::Extract,
    StepKind::Resolve,
    StepKind::Build,
    StepKind::Filter,
    StepKind::Communities,
    StepKind::Layout,
    StepKind::Export,
];

#[derive(Debug, thiserror::Error)]
pub enum StepError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Export(#[from] GexfError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("alias table: {0}")]
    Aliases(#[from] DecisionLogError),
    #[error("alias table version {version} has digest {actual}, recorded {recorded}")]
    AliasMismatch {
        version: u64,
        actual: Digest,
        recorded: Digest,
    },
    #[error("bad parameters: {0}")]
    Params(#[from] serde_json::Error),
    #[error("needs {0} output; run that step first")]
    MissingInput(StepKind),
    #[error("artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("{0} is not a pipeline step")]
    NotAStep(StepKind),
}

#[derive(Debug, thiserror::Error)]
#[error("{step} failed: {source}")]
pub struct PipelineError {
    pub step: StepKind,
    #[source]
    pub source: StepError,
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("ledger integrity: {0}")]
    Integrity(#[source] StoreError),
    #[error("record {seq} ({step}): {source}")]
    Step {
        seq: u64,
        step: StepKind,
        #[source]
        source: StepError,
    },
    #[error("record {seq} ({step}): {what} digest {actual} differs from recorded {recorded}")]
    Divergence {
        seq: u64,
        step: StepKind,
        what: &'static str,
        actual: Digest,
        recorded: Digest,
    },
    #[error("writing artifacts: {0}")]
    Write(#[source] StoreError),
}

impl ReplayError {
    pub fn seq(&self) -> Option<u64> {
        match self {
            ReplayError::Integrity(StoreError::Ledger { source, .. }) => source.seq(),
            ReplayError::Integrity(StoreError::Decisions { source, .. }) => match source {
                DecisionLogError::Ledger(e) => e.seq(),
                DecisionLogError::Rejected { seq, .. } | DecisionLogError::Divergence { seq } => Some(*seq),
            },
            ReplayError::Step { seq, .. } | ReplayError::Divergence { seq, .. } => Some(*seq),
            _ => None,
        }
    }
}

/// Files produced by one step, keyed by file name under `exports/`.
pub type Artifacts = BTreeMap<String, Vec<u8>>;

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("plain data serializes");
    v.push(b'\n');
    v
}

fn artifacts_digest(artifacts: &Artifacts) -> Digest {
    digest_named(artifacts.iter().map(|(k, v)| (k.as_str(), v.as_slice())))
}

fn combine(parts: &[(&str, Digest)]) -> Digest {
    digest_named(parts.iter().map(|(k, d)| (*k, d.0.as_slice())))
}

#[derive(Debug, Clone)]
struct Stage<T> {
    value: T,
    artifacts: Artifacts,
    digest: Digest,
}

impl<T> Stage<T> {
    fn new(value: T, artifacts: Artifacts) -> Self {
        let digest = artifacts_digest(&artifacts);
        Self {
            value,
            artifacts,
            digest,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ParsedOut {
    corpus: Corpus,
    report: ValidationReport,
}

/// Primary artifact of each loadable step.
fn primary_artifact(step: StepKind) -> &'static str {
    match step {
        StepKind::Extract => "mentions.json",
        StepKind::Resolve => "resolutions.json",
        StepKind::Build => "graph.json",
        StepKind::Filter => "filtered_graph.json",
        StepKind::Communities => "communities.json",
        StepKind::Layout => "layout.json",
        _ => "",
    }
}

fn artifact_names(step: StepKind) -> &'static [&'static str] {
    match step {
        StepKind::Parse => &["corpus.json", "validation.json"],
        StepKind::Extract => &["mentions.json"],
        StepKind::Resolve => &["queue.json", "resolutions.json"],
        StepKind::Build => &["edges.csv", "graph.json", "histogram.csv", "nodes.csv", "stats.json"],
        StepKind::Filter => &["filtered_edges.csv", "filtered_graph.json", "filtered_nodes.csv"],
        StepKind::Communities => &["communities.json", "partition.csv", "partition_full.csv"],
        StepKind::Layout => &["layout.json", "positions.csv"],
        _ => &[],
    }
}

/// Outcome of one executed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRun {
    pub step: StepKind,
    pub params: serde_json::Value,
    pub input_digest: Digest,
    pub output_digest: Digest,
}

/// In-memory outputs of the latest execution of each step.
#[derive(Debug, Default)]
pub struct Engine {
    parsed: Option<Stage<ParsedOut>>,
    extracted: Option<Stage<Vec<Vec<Mention>>>>,
    resolved: Option<Stage<Resolved>>,
    built: Option<Stage<Built>>,
    filtered: Option<Stage<Filtered>>,
    communities: Option<Stage<analysis::Communities>>,
    laid: Option<Stage<Laid>>,
    exported: Option<Stage<()>>,
    /// Directory to load missing predecessors from; `None` during replay.
    fallback: Option<PathBuf>,
}

fn table_at(log: &DecisionLog, version: u64, recorded: Digest) -> Result<AliasTable, StepError> {
    let table = if version == log.table().version() {
        log.table().clone()
    } else {
        log.table_at(version)?
    };
    let actual = table.digest();
    if actual != recorded {
        return Err(StepError::AliasMismatch {
            version,
            actual,
            recorded,
        });
    }
    Ok(table)
}

fn decode_artifact<T: DeserializeOwned>(dir: &Path, artifacts: &Artifacts, name: &str) -> Result<T, StepError> {
    serde_json::from_slice(&artifacts[name]).map_err(|e| StepError::Artifact {
        path: dir.join(name),
        message: e.to_string(),
    })
}

/// A step output that can be rebuilt from its exported files.
trait StageValue: Sized {
    fn decode(dir: &Path, step: StepKind, artifacts: &Artifacts) -> Result<Self, StepError>;
}

impl StageValue for ParsedOut {
    fn decode(dir: &Path, _: StepKind, artifacts: &Artifacts) -> Result<Self, StepError> {
        Ok(Self {
            corpus: decode_artifact(dir, artifacts, "corpus.json")?,
            report: decode_artifact(dir, artifacts, "validation.json")?,
        })
    }
}

macro_rules! primary_stage_value {
    ($($t:ty),*) => {$(
        impl StageValue for $t {
            fn decode(dir: &Path, step: StepKind, artifacts: &Artifacts) -> Result<Self, StepError> {
                decode_artifact(dir, artifacts, primary_artifact(step))
            }
        }
    )*};
}

primary_stage_value!(Vec<Vec<Mention>>, Resolved, Built, Filtered, analysis::Communities, Laid);

fn load_stage<T: StageValue>(dir: &Path, step: StepKind) -> Result<Stage<T>, StepError> {
    let mut artifacts = Artifacts::new();
    for name in artifact_names(step) {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|_| StepError::MissingInput(step))?;
        artifacts.insert(name.to_string(), bytes);
    }
    let value = T::decode(dir, step, &artifacts)?;
    Ok(Stage::new(value, artifacts))
}

macro_rules! need {
    ($self:ident, $field:ident, $step:expr) => {{
        if $self.$field.is_none() {
            match &$self.fallback {
                Some(dir) => $self.$field = Some(load_stage(dir, $step)?),
                None => return Err(StepError::MissingInput($step)),
            }
        }
        $self.$field.as_ref().expect("just ensured")
    }};
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Engine that loads missing step outputs from a previous run's exports.
    pub fn resuming(exports: &Path) -> Self {
        Self {
            fallback: Some(exports.to_path_buf()),
            ..Self::default()
        }
    }

    /// Artifacts of every executed step, sorted by file name.
    pub fn artifacts(&self) -> Artifacts {
        let mut out = Artifacts::new();
        let stages: [Option<&Artifacts>; 8] = [
            self.parsed.as_ref().map(|s| &s.artifacts),
            self.extracted.as_ref().map(|s| &s.artifacts),
            self.resolved.as_ref().map(|s| &s.artifacts),
            self.built.as_ref().map(|s| &s.artifacts),
            self.filtered.as_ref().map(|s| &s.artifacts),
            self.communities.as_ref().map(|s| &s.artifacts),
            self.laid.as_ref().map(|s| &s.artifacts),
            self.exported.as_ref().map(|s| &s.artifacts),
        ];
        for a in stages.into_iter().flatten() {
            out.extend(a.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        out
    }

    pub fn step_artifacts(&self, step: StepKind) -> Option<&Artifacts> {
        match step {
            StepKind::Parse => self.parsed.as_ref().map(|s| &s.artifacts),
            StepKind::Extract => self.extracted.as_ref().map(|s| &s.artifacts),
            StepKind::Resolve => self.resolved.as_ref().map(|s| &s.artifacts),
            StepKind::Build => self.built.as_ref().map(|s| &s.artifacts),
            StepKind::Filter => self.filtered.as_ref().map(|s| &s.artifacts),
            StepKind::Communities => self.communities.as_ref().map(|s| &s.artifacts),
            StepKind::Layout => self.laid.as_ref().map(|s| &s.artifacts),
            StepKind::Export => self.exported.as_ref().map(|s| &s.artifacts),
            _ => None,
        }
    }

    pub fn corpus(&self) -> Option<&Corpus> {
        self.parsed.as_ref().map(|s| &s.value.corpus)
    }

    pub fn built(&self) -> Option<&Built> {
        self.built.as_ref().map(|s| &s.value)
    }

    pub fn filtered(&self) -> Option<&Filtered> {
        self.filtered.as_ref().map(|s| &s.value)
    }

    pub fn communities(&self) -> Option<&analysis::Communities> {
        self.communities.as_ref().map(|s| &s.value)
    }

    pub fn laid(&self) -> Option<&Laid> {
        self.laid.as_ref().map(|s| &s.value)
    }

    pub fn resolved(&self) -> Option<&Resolved> {
        self.resolved.as_ref().map(|s| &s.value)
    }

    /// Make a step's output available, loading it from the fallback directory if needed.
    pub fn ensure(&mut self, step: StepKind) -> Result<(), StepError> {
        match step {
            StepKind::Parse => {
                let _ = need!(self, parsed, step);
            }
            StepKind::Extract => {
                let _ = need!(self, extracted, step);
            }
            StepKind::Resolve => {
                let _ = need!(self, resolved, step);
            }
            StepKind::Build => {
                let _ = need!(self, built, step);
            }
            StepKind::Filter => {
                let _ = need!(self, filtered, step);
            }
            StepKind::Communities => {
                let _ = need!(self, communities, step);
            }
            StepKind::Layout => {
                let _ = need!(self, laid, step);
            }
            other => return Err(StepError::NotAStep(other)),
        }
        Ok(())
    }

    /// Run one step with the given parameters.
    pub fn execute(
        &mut self,
        root: &Path,
        decisions: &DecisionLog,
        step: StepKind,
        params: &serde_json::Value,
    ) -> Result<StepRun, StepError> {
        let (input_digest, output_digest) = match step {
            StepKind::Parse => {
                let p: ParseParams = serde_json::from_value(params.clone())?;
                let sources = read_volumes(root, &p)?;
                let input = digest_named(sources.iter().map(|(k, v)| (k.as_str(), v.as_slice())));
                let (corpus, report) = parse_corpus(&p, &sources)?;
                let out = ParsedOut { corpus, report };
                let artifacts = Artifacts::from([
                    ("corpus.json".into(), json(&out.corpus)),
                    ("validation.json".into(), json(&out.report)),
                ]);
                let stage = Stage::new(out, artifacts);
                let d = stage.digest;
                self.parsed = Some(stage);
                (input, d)
            }
            StepKind::Extract => {
                let p: ExtractParams = serde_json::from_value(params.clone())?;
                let table = table_at(decisions, p.alias_version, p.alias_digest)?;
                let parsed = need!(self, parsed, StepKind::Parse);
                let input = combine(&[("corpus", parsed.digest), ("aliases", p.alias_digest)]);
                let mentions = extract_corpus(&parsed.value.corpus, &table, &p)?;
                let artifacts = Artifacts::from([("mentions.json".into(), json(&mentions))]);
                let stage = Stage::new(mentions, artifacts);
                let d = stage.digest;
                self.extracted = Some(stage);
                (input, d)
            }
            StepKind::Resolve => {
                let p: ResolveParams = serde_json::from_value(params.clone())?;
                let table = table_at(decisions, p.alias_version, p.alias_digest)?;
                let parsed_digest = need!(self, parsed, StepKind::Parse).digest;
                let extracted_digest = need!(self, extracted, StepKind::Extract).digest;
                let input = combine(&[
                    ("corpus", parsed_digest),
                    ("mentions", extracted_digest),
                    ("aliases", p.alias_digest),
                ]);
                let corpus = &self.parsed.as_ref().expect("ensured").value.corpus;
                let mentions = &self.extracted.as_ref().expect("ensured").value;
                let resolved = resolve_all(corpus, mentions, &table);
                let artifacts = Artifacts::from([
                    ("resolutions.json".into(), json(&resolved)),
                    ("queue.json".into(), json(&resolved.queue)),
                ]);
                let stage = Stage::new(resolved, artifacts);
                let d = stage.digest;
                self.resolved = Some(stage);
                (input, d)
            }
            StepKind::Build => {
                let p: BuildParams = serde_json::from_value(params.clone())?;
                let parsed_digest = need!(self, parsed, StepKind::Parse).digest;
                let resolved_digest = need!(self, resolved, StepKind::Resolve).digest;
                let input = combine(&[("corpus", parsed_digest), ("resolutions", resolved_digest)]);
                let mut built = build_network(
                    &self.parsed.as_ref().expect("ensured").value.corpus,
                    &self.resolved.as_ref().expect("ensured").value,
                    &p,
                );
                built.graph.provenance_id = Some(provenance_id(input, params));
                let artifacts = Artifacts::from([
                    ("graph.json".into(), json(&built)),
                    ("nodes.csv".into(), tables::nodes_csv(&built.graph)),
                    ("edges.csv".into(), tables::edges_csv(&built.graph)),
                    ("histogram.csv".into(), tables::histogram_csv(&built.histogram)),
                    ("stats.json".into(), json(&built.stats)),
                ]);
                let stage = Stage::new(built, artifacts);
                let d = stage.digest;
                self.built = Some(stage);
                (input, d)
            }
            StepKind::Filter => {
                let p: FilterParams = serde_json::from_value(params.clone())?;
                let built = need!(self, built, StepKind::Build);
                let input = combine(&[("graph", built.digest)]);
                let mut filtered = filter_network(&built.value.graph, &p);
                filtered.graph.provenance_id = Some(provenance_id(input, params));
                let artifacts = Artifacts::from([
                    ("filtered_graph.json".into(), json(&filtered)),
                    ("filtered_nodes.csv".into(), tables::nodes_csv(&filtered.graph)),
                    ("filtered_edges.csv".into(), tables::edges_csv(&filtered.graph)),
                ]);
                let stage = Stage::new(filtered, artifacts);
                let d = stage.digest;
                self.filtered = Some(stage);
                (input, d)
            }
            StepKind::Communities => {
                let p: CommunityParams = serde_json::from_value(params.clone())?;
                let built_digest = need!(self, built, StepKind::Build).digest;
                let filtered_digest = need!(self, filtered, StepKind::Filter).digest;
                let input = combine(&[("graph", built_digest), ("filtered", filtered_digest)]);
                let c = detect_communities(
                    &self.built.as_ref().expect("ensured").value.graph,
                    &self.filtered.as_ref().expect("ensured").value,
                    &p,
                );
                let artifacts = Artifacts::from([
                    ("communities.json".into(), json(&c)),
                    ("partition.csv".into(), tables::partition_csv(&c.filtered)),
                    ("partition_full.csv".into(), tables::partition_csv(&c.full)),
                ]);
                let stage = Stage::new(c, artifacts);
                let d = stage.digest;
                self.communities = Some(stage);
                (input, d)
            }
            StepKind::Layout => {
                let p: LayoutStepParams = serde_json::from_value(params.clone())?;
                let filtered = need!(self, filtered, StepKind::Filter);
                let input = combine(&[("filtered", filtered.digest)]);
                let laid = lay_out(&filtered.value.graph, &p)?;
                let artifacts = Artifacts::from([
                    ("layout.json".into(), json(&laid)),
                    ("positions.csv".into(), tables::positions_csv(&laid.positions)),
                ]);
                let stage = Stage::new(laid, artifacts);
                let d = stage.digest;
                self.laid = Some(stage);
                (input, d)
            }
            StepKind::Export => {
                let p: ExportParams = serde_json::from_value(params.clone())?;
                let filtered_digest = need!(self, filtered, StepKind::Filter).digest;
                let communities_digest = need!(self, communities, StepKind::Communities).digest;
                let laid_digest = need!(self, laid, StepKind::Layout).digest;
                let input = combine(&[
                    ("filtered", filtered_digest),
                    ("communities", communities_digest),
                    ("layout", laid_digest),
                ]);
                let graph = &self.filtered.as_ref().expect("ensured").value.graph;
                let communities = self.communities.as_ref().expect("ensured").value.filtered.assignment();
                let positions = &self.laid.as_ref().expect("ensured").value.positions;
                let mut artifacts = Artifacts::new();
                if p.formats.contains(&ExportFormat::Gexf) {
                    let doc = GexfDocument {
                        graph: graph.clone(),
                        communities: Some(communities.clone()),
                        positions: Some(positions.clone()),
                    };
                    artifacts.insert("network.gexf".into(), write_gexf(&doc)?.into_bytes());
                }
                if p.formats.contains(&ExportFormat::Csv) {
                    artifacts.insert(
                        "network_nodes.csv".into(),
                        tables::network_nodes_csv(graph, &communities, positions),
                    );
                    artifacts.insert("network_edges.csv".into(), tables::edges_csv(graph));
                }
                let stage = Stage::new((), artifacts);
                let d = stage.digest;
                self.exported = Some(stage);
                (input, d)
            }
            other => return Err(StepError::NotAStep(other)),
        };
        Ok(StepRun {
            step,
            params: params.clone(),
            input_digest,
            output_digest,
        })
    }
}

fn provenance_id(input: Digest, params: &serde_json::Value) -> Digest {
    Digest::of_parts([input.0.as_slice(), canonical_bytes(params).as_slice()])
}

/// Parameters for `step` from the project config and the current alias table.
pub fn step_params(project: &Project, decisions: &DecisionLog, step: StepKind) -> Result<serde_json::Value, StepError> {
    let c = &project.config;
    let table = decisions.table();
    let v = match step {
        StepKind::Parse => serde_json::to_value(parse_params(&project.root, c)?)?,
        StepKind::Extract => serde_json::to_value(ExtractParams {
            alias_version: table.version(),
            alias_digest: table.digest(),
            honorifics: c.extraction.honorifics.clone(),
            honorific_candidates: c.extraction.honorific_candidates,
            max_candidate_tokens: c.extraction.max_candidate_tokens,
        })?,
        StepKind::Resolve => serde_json::to_value(ResolveParams {
            alias_version: table.version(),
            alias_digest: table.digest(),
        })?,
        StepKind::Build => serde_json::to_value(BuildParams {
            ego: c.graph.ego.iter().cloned().collect(),
            window_days: c.graph.window_days,
        })?,
        StepKind::Filter => serde_json::to_value(FilterParams {
            criterion: c.graph.filter,
        })?,
        StepKind::Communities => serde_json::to_value(CommunityParams {
            seed: c.communities.seed,
            gamma: c.communities.gamma,
        })?,
        StepKind::Layout => serde_json::to_value(LayoutStepParams {
            seed: c.layout.seed,
            forces: c.layout.forces.clone(),
            labels: c.layout.labels.clone(),
        })?,
        StepKind::Export => serde_json::to_value(ExportParams {
            formats: c.export.formats.clone(),
        })?,
        other => return Err(StepError::NotAStep(other)),
    };
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: Vec<StepRun>,
    pub first_seq: u64,
    /// Files written under `exports/`.
    pub written: Vec<String>,
}

/// Execute `steps` in order, loading any missing predecessor outputs from
/// `exports/`. Each successful step writes its artifacts and appends one
/// ledger record before the next starts.
pub fn run_steps(project: &Project, steps: &[StepKind]) -> Result<(RunSummary, Engine), PipelineError> {
    let fail = |step, source: StepError| PipelineError { step, source };
    let first = steps.first().copied().unwrap_or(StepKind::Parse);
    let decisions = project.load_decisions().map_err(|e| fail(first, e.into()))?;
    let mut ledger = project.load_ledger().map_err(|e| fail(first, e.into()))?;
    let exports = project.exports_dir();
    let mut engine = Engine::resuming(&exports);
    let mut summary = RunSummary {
        steps: Vec::new(),
        first_seq: ledger.next_seq(),
        written: Vec::new(),
    };
    for &step in steps {
        let params = step_params(project, &decisions, step).map_err(|e| fail(step, e))?;
        let run = engine
            .execute(&project.root, &decisions, step, &params)
            .map_err(|e| fail(step, e))?;
        for (name, bytes) in engine.step_artifacts(step).expect("step just ran") {
            write_atomic(&exports.join(name), bytes).map_err(|e| fail(step, e.into()))?;
            summary.written.push(name.clone());
        }
        let mut body = RecordBody::auto(step, run.params.clone(), run.input_digest, run.output_digest);
        body.timestamp = now_timestamp();
        append_record(&project.provenance_path(), &mut ledger, body).map_err(|e| fail(step, e.into()))?;
        log::info!("{step}: {}", run.output_digest);
        summary.steps.push(run);
    }
    Ok((summary, engine))
}

/// Full run: parse through export.
pub fn run_pipeline(project: &Project) -> Result<(RunSummary, Engine), PipelineError> {
    run_steps(project, &PIPELINE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySummary {
    pub records: usize,
    pub steps_executed: usize,
    pub decisions_checked: usize,
    pub written: Vec<String>,
}

/// Verify both logs, re-execute every recorded step against the raw corpus
/// files and compare digests, then write the final artifacts to `out` when given.
pub fn replay(project: &Project, out: Option<&Path>) -> Result<(ReplaySummary, Engine), ReplayError> {
    let ledger = project.load_ledger().map_err(ReplayError::Integrity)?;
    let decisions = project.load_decisions().map_err(ReplayError::Integrity)?;
    let (summary, engine) = replay_ledger(&project.root, &ledger, &decisions)?;
    let mut summary = summary;
    if let Some(dir) = out {
        for (name, bytes) in engine.artifacts() {
            write_atomic(&dir.join(&name), &bytes).map_err(ReplayError::Write)?;
            summary.written.push(name);
        }
    }
    Ok((summary, engine))
}

pub fn replay_ledger(
    root: &Path,
    ledger: &Ledger,
    decisions: &DecisionLog,
) -> Result<(ReplaySummary, Engine), ReplayError> {
    let mut engine = Engine::new();
    let mut summary = ReplaySummary {
        records: ledger.len(),
        steps_executed: 0,
        decisions_checked: 0,
        written: Vec::new(),
    };
    for record in ledger.records() {
        let (seq, step) = (record.seq, record.step);
        let diverged = |what, actual, recorded| ReplayError::Divergence {
            seq,
            step,
            what,
            actual,
            recorded,
        };
        if step == StepKind::Decision {
            let version = record
                .params
                .get("version_after")
                .and_then(serde_json::Value::as_u64)
                .ok_or_else(|| ReplayError::Integrity(StoreError::Ledger {
                    path: PathBuf::from(crate::project::PROVENANCE_LOG),
                    source: LedgerError::Malformed {
                        line: seq as usize + 1,
                        message: "decision record without version_after".into(),
                    },
                }))?;
            let table = decisions
                .table_at(version)
                .map_err(|e| ReplayError::Step {
                    seq,
                    step,
                    source: e.into(),
                })?;
            if table.digest() != record.output_digest {
                return Err(diverged("output", table.digest(), record.output_digest));
            }
            summary.decisions_checked += 1;
            continue;
        }
        let run = engine
            .execute(root, decisions, step, &record.params)
            .map_err(|source| ReplayError::Step { seq, step, source })?;
        if run.input_digest != record.input_digest {
            return Err(diverged("input", run.input_digest, record.input_digest));
        }
        if run.output_digest != record.output_digest {
            return Err(diverged("output", run.output_digest, record.output_digest));
        }
        summary.steps_executed += 1;
    }
    Ok((summary, engine))
}
