//! Weighted modularity, Louvain community detection, an exhaustive oracle
//! for small graphs, and Rand-index agreement between partitions.

mod exhaustive;
mod louvain;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::entity::EntityId;
use crate::graph::CoocGraph;

pub use exhaustive::{brute_force_best_partition, MAX_EXHAUSTIVE_NODES};
pub use louvain::{louvain, louvain_from_order, louvain_observed, MoveEvent};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CommunityError {
    #[error("modularity is undefined for a graph without edges")]
    UndefinedModularity,
    #[error("node {0} has no community assignment")]
    MissingNode(EntityId),
    #[error("exhaustive search refused for {0} nodes (limit {MAX_EXHAUSTIVE_NODES})")]
    TooLarge(usize),
    #[error("agreement needs a non-empty node subset")]
    EmptySubset,
    #[error("visit order is not a permutation of the graph's nodes")]
    BadOrder,
}

/// Index-based undirected graph with self-loops, the working form for
/// community algorithms. Adjacency lists are sorted by neighbor index and
/// exclude self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degrees: Vec<f64>,
    total_weight: f64,
}

impl WeightedGraph {
    /// Edges as `(a, b, w)`; `a == b` is a self-loop. Parallel edges add up.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        let mut self_loops = vec![0.0; n];
        for &(a, b, w) in edges {
            if a == b {
                self_loops[a] += w;
            } else {
                *maps[a].entry(b).or_insert(0.0) += w;
                *maps[b].entry(a).or_insert(0.0) += w;
            }
        }
        let adjacency: Vec<Vec<(usize, f64)>> = maps.into_iter().map(|m| m.into_iter().collect()).collect();
        Self::assemble(adjacency, self_loops)
    }

    fn assemble(adjacency: Vec<Vec<(usize, f64)>>, self_loops: Vec<f64>) -> Self {
        let degrees: Vec<f64> = adjacency
            .iter()
            .zip(&self_loops)
            .map(|(adj, l)| adj.iter().map(|(_, w)| w).sum::<f64>() + 2.0 * l)
            .collect();
        let total_weight = degrees.iter().sum::<f64>() / 2.0;
        Self {
            adjacency,
            self_loops,
            degrees,
            total_weight,
        }
    }

    /// Nodes in id order.
    pub fn from_cooc(graph: &CoocGraph) -> (Self, Vec<EntityId>) {
        let ids: Vec<EntityId> = graph.nodes.keys().cloned().collect();
        let index: BTreeMap<&EntityId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let edges: Vec<(usize, usize, f64)> = graph
            .edges
            .iter()
            .map(|e| (index[&e.source], index[&e.target], f64::from(e.weight)))
            .collect();
        (Self::from_edges(ids.len(), &edges), ids)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn self_loop(&self, i: usize) -> f64 {
        self.self_loops[i]
    }

    /// Weighted degree; a self-loop counts twice.
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    /// Sum of edge weights, each edge and self-loop counted once.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Relabel so that new node `p` is old node `order[p]`.
    pub(crate) fn permuted(&self, order: &[usize]) -> Self {
        let mut position = vec![0usize; order.len()];
        for (p, &old) in order.iter().enumerate() {
            position[old] = p;
        }
        let adjacency = order
            .iter()
            .map(|&old| {
                let mut adj: Vec<(usize, f64)> = self.adjacency[old].iter().map(|&(o, w)| (position[o], w)).collect();
                adj.sort_by_key(|&(p, _)| p);
                adj
            })
            .collect();
        let self_loops = order.iter().map(|&old| self.self_loops[old]).collect();
        Self::assemble(adjacency, self_loops)
    }

    /// Collapse communities (labels `0..count`) into super-nodes; internal
    /// weight becomes self-loops.
    pub(crate) fn aggregate(&self, labels: &[usize], count: usize) -> Self {
        let mut edges = Vec::new();
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &(j, w) in adj {
                if i < j {
                    edges.push((labels[i], labels[j], w));
                }
            }
            if self.self_loops[i] != 0.0 {
                edges.push((labels[i], labels[i], self.self_loops[i]));
            }
        }
        Self::from_edges(count, &edges)
    }
}

/// `Q = sum_c [ W_in(c) / W - gamma * (S(c) / 2W)^2 ]`; `None` when `W = 0`.
pub fn modularity_indexed(graph: &WeightedGraph, assignment: &[usize], gamma: f64) -> Option<f64> {
    let w = graph.total_weight();
    if w <= 0.0 {
        return None;
    }
    let mut inner: BTreeMap<usize, f64> = BTreeMap::new();
    let mut strength: BTreeMap<usize, f64> = BTreeMap::new();
    for i in 0..graph.node_count() {
        let c = assignment[i];
        *strength.entry(c).or_insert(0.0) += graph.degree(i);
        let mut within = graph.self_loop(i);
        for &(j, wij) in graph.neighbors(i) {
            if i < j && assignment[j] == c {
                within += wij;
            }
        }
        *inner.entry(c).or_insert(0.0) += within;
    }
    let q = strength
        .iter()
        .map(|(c, s)| {
            let win = inner.get(c).copied().unwrap_or(0.0);
            let frac = s / (2.0 * w);
            win / w - gamma * frac * frac
        })
        .sum();
    Some(q)
}

/// Modularity of an id → label assignment on a co-occurrence graph.
pub fn modularity(
    graph: &CoocGraph,
    assignment: &BTreeMap<EntityId, usize>,
    gamma: f64,
) -> Result<f64, CommunityError> {
    let (wg, ids) = WeightedGraph::from_cooc(graph);
    let labels = ids
        .iter()
        .map(|id| assignment.get(id).copied().ok_or_else(|| CommunityError::MissingNode(id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    modularity_indexed(&wg, &labels, gamma).ok_or(CommunityError::UndefinedModularity)
}

/// Relabel to `0..C` by order of first appearance.
pub fn canonical_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let out = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

/// A community hierarchy. `levels[0]` is the finest assignment and each
/// later level coarsens the previous one; the last level is the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub nodes: Vec<EntityId>,
    pub levels: Vec<Vec<usize>>,
    /// Q of each level on the original graph.
    pub modularity: Vec<f64>,
}

impl Partition {
    pub fn singletons(nodes: Vec<EntityId>) -> Self {
        let labels = (0..nodes.len()).collect();
        Self {
            nodes,
            levels: vec![labels],
            modularity: vec![0.0],
        }
    }

    pub fn top(&self) -> &[usize] {
        self.levels.last().map_or(&[], Vec::as_slice)
    }

    pub fn finest(&self) -> &[usize] {
        self.levels.first().map_or(&[], Vec::as_slice)
    }

    pub fn final_modularity(&self) -> f64 {
        self.modularity.last().copied().unwrap_or(0.0)
    }

    pub fn community_count(&self) -> usize {
        self.top().iter().collect::<BTreeSet<_>>().len()
    }

    /// Top-level assignment by id.
    pub fn assignment(&self) -> BTreeMap<EntityId, usize> {
        self.level_assignment(self.levels.len().saturating_sub(1))
    }

    pub fn level_assignment(&self, level: usize) -> BTreeMap<EntityId, usize> {
        self.nodes
            .iter()
            .cloned()
            .zip(self.levels[level].iter().copied())
            .collect()
    }

    /// Whether every level's label sets nest inside the next level's.
    pub fn is_nested(&self) -> bool {
        self.levels.windows(2).all(|w| {
            let mut up: BTreeMap<usize, usize> = BTreeMap::new();
            w[0].iter().zip(&w[1]).all(|(fine, coarse)| *up.entry(*fine).or_insert(*coarse) == *coarse)
        })
    }
}

/// Rand index over node pairs in `subset`: the fraction of pairs on which
/// both partitions agree (together in both or apart in both). A single node
/// scores 1.
pub fn partition_agreement(
    p1: &BTreeMap<EntityId, usize>,
    p2: &BTreeMap<EntityId, usize>,
    subset: &BTreeSet<EntityId>,
) -> Result<f64, CommunityError> {
    if subset.is_empty() {
        return Err(CommunityError::EmptySubset);
    }
    let mut labels = Vec::with_capacity(subset.len());
    for id in subset {
        let a = p1.get(id).ok_or_else(|| CommunityError::MissingNode(id.clone()))?;
        let b = p2.get(id).ok_or_else(|| CommunityError::MissingNode(id.clone()))?;
        labels.push((*a, *b));
    }
    if labels.len() == 1 {
        return Ok(1.0);
    }
    let mut agree = 0u64;
    let mut total = 0u64;
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            total += 1;
            if (labels[i].0 == labels[j].0) == (labels[i].1 == labels[j].1) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / total as f64)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// `(1/2W) sum_ij [A_ij - gamma k_i k_j / 2W] delta(c_i, c_j)` over a dense
    /// adjacency matrix; an independent route to Q.
    pub(crate) fn direct_sum_modularity(n: usize, edges: &[(usize, usize, f64)], labels: &[usize], gamma: f64) -> f64 {
        let mut a = vec![vec![0.0f64; n]; n];
        for &(i, j, w) in edges {
            if i == j {
                a[i][i] += 2.0 * w;
            } else {
                a[i][j] += w;
                a[j][i] += w;
            }
        }
        let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
        let two_w: f64 = k.iter().sum();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    q += a[i][j] - gamma * k[i] * k[j] / two_w;
                }
            }
        }
        q / two_w
    }

    pub(crate) fn barbell() -> Vec<(usize, usize, f64)> {
        vec![
            (0, 1, 1.0),
            (1, 2, 1.0),
            (0, 2, 1.0),
            (3, 4, 1.0),
            (4, 5, 1.0),
            (3, 5, 1.0),
            (2, 3, 1.0),
        ]
    }

    #[test]
    fn modularity_examples() {
        let g = WeightedGraph::from_edges(6, &barbell());
        assert_eq!(modularity_indexed(&g, &[0; 6], 1.0), Some(0.0));

        let pair = WeightedGraph::from_edges(2, &[(0, 1, 1.0)]);
        assert_eq!(modularity_indexed(&pair, &[0, 1], 1.0), Some(-0.5));

        let q = modularity_indexed(&g, &[0, 0, 0, 1, 1, 1], 1.0).unwrap();
        assert!((q - 5.0 / 14.0).abs() <= 1e-12 * (5.0 / 14.0));
        let direct = direct_sum_modularity(6, &barbell(), &[0, 0, 0, 1, 1, 1], 1.0);
        assert!((q - direct).abs() <= 1e-12 * direct.abs());

        let empty = WeightedGraph::from_edges(3, &[]);
        assert_eq!(modularity_indexed(&empty, &[0, 1, 2], 1.0), None);
    }

    #[test]
    fn modularity_with_self_loops_matches_direct_sum() {
        let edges = [(0, 0, 2.0), (0, 1, 1.5), (1, 2, 3.0), (2, 2, 0.5), (2, 3, 1.0)];
        let g = WeightedGraph::from_edges(4, &edges);
        for labels in [[0, 0, 1, 1], [0, 1, 2, 3], [0, 1, 1, 0]] {
            for gamma in [0.5, 1.0, 2.0] {
                let a = modularity_indexed(&g, &labels, gamma).unwrap();
                let b = direct_sum_modularity(4, &edges, &labels, gamma);
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{labels:?} {gamma}");
            }
        }
    }

    #[test]
    fn aggregation_preserves_modularity() {
        let g = WeightedGraph::from_edges(6, &barbell());
        let labels = [0, 0, 0, 1, 1, 1];
        let agg = g.aggregate(&labels, 2);
        assert_eq!(agg.self_loop(0), 3.0);
        assert_eq!(agg.total_weight(), g.total_weight());
        let q_fine = modularity_indexed(&g, &labels, 1.0).unwrap();
        let q_coarse = modularity_indexed(&agg, &[0, 1], 1.0).unwrap();
        assert!((q_fine - q_coarse).abs() < 1e-15);
    }

    #[test]
    fn missing_assignment_is_an_error() {
        let g = crate::graph::build_cooccurrence(
            &[crate::graph::DayMentions {
                date: crate::date::Date::new(1891, 5, 5).unwrap(),
                entities: vec!["a".into(), "b".into()],
            }],
            0,
            &BTreeMap::new(),
        );
        let partial = BTreeMap::from([(EntityId::from("a"), 0)]);
        assert_eq!(modularity(&g, &partial, 1.0), Err(CommunityError::MissingNode("b".into())));
    }

    #[test]
    fn agreement_examples() {
        let ids: Vec<EntityId> = ["a", "b", "c", "d"].iter().map(|s| EntityId::from(*s)).collect();
        let p1: BTreeMap<_, _> = ids.iter().cloned().zip([0, 0, 1, 1]).collect();
        let p2: BTreeMap<_, _> = ids.iter().cloned().zip([0, 0, 0, 0]).collect();
        let all: BTreeSet<_> = ids.iter().cloned().collect();
        assert_eq!(partition_agreement(&p1, &p1, &all), Ok(1.0));
        let r = partition_agreement(&p1, &p2, &all).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(partition_agreement(&p1, &p2, &[ids[0].clone()].into()), Ok(1.0));
        assert_eq!(partition_agreement(&p1, &p2, &BTreeSet::new()), Err(CommunityError::EmptySubset));
        let extra: BTreeSet<_> = [EntityId::from("zz")].into();
        assert!(matches!(partition_agreement(&p1, &p2, &extra), Err(CommunityError::MissingNode(_))));
    }

    #[test]
    fn canonical_labels_first_appearance() {
        assert_eq!(canonical_labels(&[7, 3, 7, 9]), (vec![0, 1, 0, 2], 3));
    }
}
