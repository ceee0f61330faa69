//! Writes a complete project around a synthetic corpus.

use std::path::Path;

use capta_core::extraction::Normalizer;
use capta_core::graph::FilterCriterion;
use capta_core::resolution::{Decision, DecisionKind, DecisionLog};
use capta_core::synth::{generate, SynthCorpus, SynthError, SynthParams};

use crate::config::ProjectConfig;
use crate::project::{write_atomic, write_decision_log, StoreError, ALIASES_LOG};

pub const TRUTH_FILE: &str = "truth.json";
pub const SEED_ACTOR: &str = "fixture-gen";

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0} already contains a project")]
    Exists(String),
}

/// Seed decisions creating one entity per generated person plus the diarist.
pub fn seed_decisions(corpus: &SynthCorpus, timestamp: &str) -> Vec<Decision> {
    let normalizer = Normalizer::default();
    std::iter::once(&corpus.ego)
        .chain(&corpus.persons)
        .map(|p| Decision {
            kind: DecisionKind::NewEntity {
                id: Some(p.id.clone()),
                display_name: p.display_name.clone(),
                aliases: vec![normalizer.normalize(&p.display_name)],
            },
            actor: SEED_ACTOR.into(),
            rationale: "seed gazetteer from the synthetic generator".into(),
            timestamp: timestamp.into(),
        })
        .collect()
}

/// Create `dir` as a project: config, one corpus volume, the seeded alias
/// log and the generator's ground truth. Refuses to overwrite a project.
pub fn write_fixture_project(dir: &Path, params: &SynthParams) -> Result<SynthCorpus, FixtureError> {
    if dir.join(ALIASES_LOG).exists() {
        return Err(FixtureError::Exists(dir.display().to_string()));
    }
    let corpus = generate(params)?;
    let mut config = ProjectConfig::default();
    config.graph.ego = vec![corpus.ego.id.clone()];
    config.graph.filter = FilterCriterion::MinDays(2);
    config.communities.seed = params.seed;
    config.layout.seed = params.seed;
    write_atomic(&ProjectConfig::path(dir), config.to_toml().as_bytes())?;
    write_atomic(
        &dir.join("corpus").join(format!("{}.txt", corpus.volume_id)),
        corpus.text.as_bytes(),
    )?;
    let mut log = DecisionLog::new();
    for d in seed_decisions(&corpus, "") {
        log.submit(d).expect("generated names are unique");
    }
    write_decision_log(&dir.join(ALIASES_LOG), &log)?;
    let mut truth = serde_json::to_vec_pretty(&corpus.truth).expect("plain data");
    truth.push(b'\n');
    write_atomic(&dir.join(TRUTH_FILE), &truth)?;
    Ok(corpus)
}
