//! Corpus statistics report over a project's exports.

use std::fmt::Write;

use capta_core::graph::{CorpusStats, FrequencyHistogram};
use capta_core::provenance::StepKind;
use serde::Serialize;

use crate::pipeline::{Engine, PipelineError};
use crate::project::Project;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub stats: CorpusStats,
    pub histogram: FrequencyHistogram,
    pub nodes: usize,
    pub edges: usize,
    pub filtered_nodes: Option<usize>,
    pub filtered_edges: Option<usize>,
    pub communities_full: Option<usize>,
    pub communities_filtered: Option<usize>,
    /// Rand index of filtered against full communities over retained nodes.
    pub agreement: Option<f64>,
}

fn or_undefined(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"))
}

impl StatsReport {
    pub fn to_text(&self) -> String {
        let s = &self.stats;
        let mut out = String::new();
        let _ = writeln!(out, "days: {}", s.days);
        let _ = writeln!(out, "mean persons/day: {}", or_undefined(s.mean_persons_per_day));
        let _ = writeln!(out, "sd persons/day: {}", or_undefined(s.sd_persons_per_day));
        let _ = writeln!(out, "total persons: {}", s.total_persons);
        let _ = writeln!(
            out,
            "span days: {}",
            s.span_days.map_or_else(|| "undefined".to_string(), |d| d.to_string())
        );
        let _ = writeln!(out, "nodes: {}", self.nodes);
        let _ = writeln!(out, "edges: {}", self.edges);
        if let (Some(n), Some(e)) = (self.filtered_nodes, self.filtered_edges) {
            let _ = writeln!(out, "filtered nodes: {n} ({} hidden)", self.nodes - n);
            let _ = writeln!(out, "filtered edges: {e}");
        }
        if let Some(c) = self.communities_full {
            let _ = writeln!(out, "communities (full): {c}");
        }
        if let Some(c) = self.communities_filtered {
            let _ = writeln!(out, "communities (filtered): {c}");
        }
        let _ = writeln!(out, "partition agreement: {}", or_undefined(self.agreement));
        let _ = writeln!(out, "histogram (days_mentioned: persons):");
        for (d, n) in &self.histogram.bins {
            let _ = writeln!(out, "  {d}: {n}");
        }
        out
    }
}

/// Requires a built graph in `exports/`; filter and community outputs are used when present.
pub fn stats_report(project: &Project) -> Result<StatsReport, PipelineError> {
    let mut engine = Engine::resuming(&project.exports_dir());
    engine.ensure(StepKind::Build).map_err(|source| PipelineError {
        step: StepKind::Build,
        source,
    })?;
    let _ = engine.ensure(StepKind::Filter);
    let _ = engine.ensure(StepKind::Communities);
    let built = engine.built().expect("ensured");
    let filtered = engine.filtered();
    let communities = engine.communities();
    Ok(StatsReport {
        stats: built.stats.clone(),
        histogram: built.histogram.clone(),
        nodes: built.graph.node_count(),
        edges: built.graph.edge_count(),
        filtered_nodes: filtered.map(|f| f.graph.node_count()),
        filtered_edges: filtered.map(|f| f.graph.edge_count()),
        communities_full: communities.map(|c| c.full.community_count()),
        communities_filtered: communities.map(|c| c.filtered.community_count()),
        agreement: communities.and_then(|c| c.agreement),
    })
}
