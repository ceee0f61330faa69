//! Person co-occurrence graphs, scale filters and frequency statistics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::date::Date;
use crate::digest::Digest;
use crate::entity::EntityId;
use crate::resolution::{EntryResolutions, ResolutionStatus};

/// Resolved entities mentioned on one date, one element per mention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayMentions {
    pub date: Date,
    pub entities: Vec<EntityId>,
}

/// Group resolved mentions by date, dropping excluded entities. Every dated
/// entry yields a day even if nothing in it resolved.
pub fn day_mentions(
    corpus: &Corpus,
    resolutions: &[EntryResolutions],
    excluded: &BTreeSet<EntityId>,
) -> Vec<DayMentions> {
    let mut by_date: BTreeMap<Date, Vec<EntityId>> = BTreeMap::new();
    for entry in &corpus.entries {
        by_date.entry(entry.date).or_default();
    }
    for er in resolutions {
        let date = corpus.entries[er.entry].date;
        let day = by_date.entry(date).or_default();
        for r in &er.resolutions {
            if let ResolutionStatus::Resolved { entity } = &r.status {
                if !excluded.contains(entity) {
                    day.push(entity.clone());
                }
            }
        }
    }
    by_date
        .into_iter()
        .map(|(date, entities)| DayMentions { date, entities })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub display_name: String,
    pub days_mentioned: u32,
    pub total_mentions: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub source: EntityId,
    pub target: EntityId,
    pub weight: u32,
}

/// Undirected weighted graph. Edges are stored once with `source < target`,
/// sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoocGraph {
    pub nodes: BTreeMap<EntityId, NodeInfo>,
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance_id: Option<Digest>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("edge {0}-{1} is a self-loop")]
    SelfLoop(EntityId, EntityId),
    #[error("edge {0}-{1} references a missing node")]
    MissingEndpoint(EntityId, EntityId),
    #[error("edge {0}-{1} has weight 0")]
    ZeroWeight(EntityId, EntityId),
    #[error("edge {0}-{1} is duplicated or out of order")]
    Unordered(EntityId, EntityId),
}

impl CoocGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight(&self, a: &EntityId, b: &EntityId) -> Option<u32> {
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (&e.source, &e.target).cmp(&(s, t)))
            .ok()
            .map(|i| self.edges[i].weight)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| u64::from(e.weight)).sum()
    }

    /// Digest of nodes and edges (ignores `provenance_id`).
    pub fn content_digest(&self) -> Digest {
        Digest::of_value(&(&self.nodes, &self.edges))
    }

    /// Assemble from parts, sorting and orienting edges.
    pub fn from_parts<I>(nodes: BTreeMap<EntityId, NodeInfo>, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = Edge>,
    {
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| {
                if e.source <= e.target {
                    e
                } else {
                    Edge {
                        source: e.target,
                        target: e.source,
                        weight: e.weight,
                    }
                }
            })
            .collect();
        edges.sort();
        let g = CoocGraph {
            nodes,
            edges,
            provenance_id: None,
        };
        g.check()?;
        Ok(g)
    }

    /// Structural invariants (not the days bound, which needs the corpus).
    pub fn check(&self) -> Result<(), GraphError> {
        for (i, e) in self.edges.iter().enumerate() {
            let pair = || (e.source.clone(), e.target.clone());
            if e.source == e.target {
                let (a, b) = pair();
                return Err(GraphError::SelfLoop(a, b));
            }
            if !self.nodes.contains_key(&e.source) || !self.nodes.contains_key(&e.target) {
                let (a, b) = pair();
                return Err(GraphError::MissingEndpoint(a, b));
            }
            if e.weight == 0 {
                let (a, b) = pair();
                return Err(GraphError::ZeroWeight(a, b));
            }
            if e.source > e.target || (i > 0 && (&self.edges[i - 1].source, &self.edges[i - 1].target) >= (&e.source, &e.target)) {
                let (a, b) = pair();
                return Err(GraphError::Unordered(a, b));
            }
        }
        Ok(())
    }

    /// Weighted degree, i.e. the sum of incident edge weights.
    pub fn strength(&self, id: &EntityId) -> u64 {
        self.edges
            .iter()
            .filter(|e| &e.source == id || &e.target == id)
            .map(|e| u64::from(e.weight))
            .sum()
    }
}

/// Build the co-mention graph. With `window_days = 0` the weight of `{u, v}`
/// is the number of distinct dates on which both are mentioned. With a
/// window `k`, it is `min(|{d in D_u : some e in D_v, |d - e| <= k}|, same for v)`,
/// which reduces to the shared-day count at `k = 0` and never exceeds either
/// node's day count.
pub fn build_cooccurrence(
    days: &[DayMentions],
    window_days: u32,
    display_names: &BTreeMap<EntityId, String>,
) -> CoocGraph {
    let mut dates_of: BTreeMap<&EntityId, BTreeSet<i64>> = BTreeMap::new();
    let mut mentions_of: BTreeMap<&EntityId, u32> = BTreeMap::new();
    for day in days {
        let n = day.date.to_days();
        for id in &day.entities {
            dates_of.entry(id).or_default().insert(n);
            *mentions_of.entry(id).or_default() += 1;
        }
    }

    let nodes: BTreeMap<EntityId, NodeInfo> = dates_of
        .iter()
        .map(|(id, dates)| {
            let info = NodeInfo {
                display_name: display_names
                    .get(*id)
                    .cloned()
                    .unwrap_or_else(|| String::from(id.as_str())),
                days_mentioned: dates.len() as u32,
                total_mentions: mentions_of[id],
            };
            ((*id).clone(), info)
        })
        .collect();

    // Entities per day number.
    let mut on_day: BTreeMap<i64, BTreeSet<&EntityId>> = BTreeMap::new();
    for (id, dates) in &dates_of {
        for d in dates {
            on_day.entry(*d).or_default().insert(*id);
        }
    }

    let mut weights: BTreeMap<(&EntityId, &EntityId), u32> = BTreeMap::new();
    if window_days == 0 {
        for ids in on_day.values() {
            let ids: Vec<&EntityId> = ids.iter().copied().collect();
            for (i, a) in ids.iter().enumerate() {
                for b in &ids[i + 1..] {
                    *weights.entry((*a, *b)).or_default() += 1;
                }
            }
        }
    } else {
        let k = i64::from(window_days);
        let mut pairs: BTreeSet<(&EntityId, &EntityId)> = BTreeSet::new();
        for (d, ids) in &on_day {
            for (_, later) in on_day.range(*d..=*d + k) {
                for a in ids {
                    for b in later {
                        if a != b {
                            pairs.insert(if a < b { (*a, *b) } else { (*b, *a) });
                        }
                    }
                }
            }
        }
        let near = |mine: &BTreeSet<i64>, theirs: &BTreeSet<i64>| {
            mine.iter()
                .filter(|d| theirs.range(**d - k..=**d + k).next().is_some())
                .count() as u32
        };
        for (a, b) in pairs {
            let (da, db) = (&dates_of[a], &dates_of[b]);
            weights.insert((a, b), near(da, db).min(near(db, da)));
        }
    }

    let edges = weights
        .into_iter()
        .map(|((a, b), weight)| Edge {
            source: a.clone(),
            target: b.clone(),
            weight,
        })
        .collect();
    CoocGraph {
        nodes,
        edges,
        provenance_id: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FilterCriterion {
    /// Keep nodes mentioned on at least this many days.
    MinDays(u32),
    /// Keep the n most-mentioned nodes, ties broken by display name.
    TopN(usize),
}

/// Induced subgraph on the retained nodes; weights unchanged.
pub fn filter_graph(graph: &CoocGraph, criterion: FilterCriterion) -> (CoocGraph, BTreeSet<EntityId>) {
    let retained: BTreeSet<EntityId> = match criterion {
        FilterCriterion::MinDays(k) => graph
            .nodes
            .iter()
            .filter(|(_, n)| n.days_mentioned >= k)
            .map(|(id, _)| id.clone())
            .collect(),
        FilterCriterion::TopN(n) => {
            let mut ranked: Vec<(&EntityId, &NodeInfo)> = graph.nodes.iter().collect();
            ranked.sort_by(|(ia, a), (ib, b)| {
                b.days_mentioned
                    .cmp(&a.days_mentioned)
                    .then_with(|| a.display_name.cmp(&b.display_name))
                    .then_with(|| ia.cmp(ib))
            });
            ranked.into_iter().take(n).map(|(id, _)| id.clone()).collect()
        }
    };
    let nodes = graph
        .nodes
        .iter()
        .filter(|(id, _)| retained.contains(*id))
        .map(|(id, n)| (id.clone(), n.clone()))
        .collect();
    let edges = graph
        .edges
        .iter()
        .filter(|e| retained.contains(&e.source) && retained.contains(&e.target))
        .cloned()
        .collect();
    let filtered = CoocGraph {
        nodes,
        edges,
        provenance_id: None,
    };
    (filtered, retained)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyHistogram {
    /// days_mentioned → number of persons.
    pub bins: BTreeMap<u32, usize>,
}

impl FrequencyHistogram {
    pub fn total(&self) -> usize {
        self.bins.values().sum()
    }

    /// Most populated bin; the smaller key wins ties.
    pub fn modal_bin(&self) -> Option<u32> {
        self.bins
            .iter()
            .max_by(|(ka, a), (kb, b)| a.cmp(b).then_with(|| kb.cmp(ka)))
            .map(|(k, _)| *k)
    }
}

pub fn mention_frequency(graph: &CoocGraph) -> FrequencyHistogram {
    let mut h = FrequencyHistogram::default();
    for n in graph.nodes.values() {
        *h.bins.entry(n.days_mentioned).or_default() += 1;
    }
    h
}

/// Persons-per-day summary. Statistics are `None` for an empty corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub days: usize,
    pub mean_persons_per_day: Option<f64>,
    /// Population standard deviation.
    pub sd_persons_per_day: Option<f64>,
    pub total_persons: usize,
    /// Inclusive calendar span from first to last date.
    pub span_days: Option<i64>,
}

pub fn corpus_stats(days: &[DayMentions]) -> CorpusStats {
    let counts: Vec<f64> = days
        .iter()
        .map(|d| d.entities.iter().collect::<BTreeSet<_>>().len() as f64)
        .collect();
    let persons: BTreeSet<&EntityId> = days.iter().flat_map(|d| d.entities.iter()).collect();
    let n = counts.len() as f64;
    let (mean, sd) = if counts.is_empty() {
        (None, None)
    } else {
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n;
        (Some(mean), Some(libm::sqrt(var)))
    };
    let span = match (days.iter().map(|d| d.date).min(), days.iter().map(|d| d.date).max()) {
        (Some(a), Some(b)) => Some(a.days_until(&b) + 1),
        _ => None,
    };
    CorpusStats {
        days: counts.len(),
        mean_persons_per_day: mean,
        sd_persons_per_day: sd,
        total_persons: persons.len(),
        span_days: span,
    }
}
