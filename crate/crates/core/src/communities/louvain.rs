//! Two-phase Louvain: greedy single-node moves, then aggregation of
//! communities into super-nodes, repeated until no node moves.
//!
//! Each level is processed on a copy of the level graph relabeled so that
//! the visit order is `0..n`. Community labels, tie-breaks and the numbering
//! of super-nodes therefore depend only on visit positions, which makes the
//! result covariant under node relabeling.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{canonical_labels, modularity_indexed, CommunityError, Partition, WeightedGraph};
use crate::graph::CoocGraph;

const MAX_SWEEPS: usize = 10_000;
/// Relative improvement a move must exceed; guards against float churn.
const GAIN_TOLERANCE: f64 = 1e-12;

/// One accepted move, reported on the level graph in visit-position labels.
pub struct MoveEvent<'a> {
    pub level: usize,
    pub graph: &'a WeightedGraph,
    /// Community of every level node after the move.
    pub assignment: &'a [usize],
    pub node: usize,
    pub from: usize,
    pub to: usize,
    /// Predicted change in Q.
    pub delta_q: f64,
}

/// Phase 1 on a graph whose visit order is its index order. Returns labels
/// (arbitrary ids, not canonical) and whether anything moved.
fn local_moving(
    graph: &WeightedGraph,
    gamma: f64,
    level: usize,
    observer: &mut dyn FnMut(&MoveEvent<'_>),
) -> (Vec<usize>, bool) {
    let n = graph.node_count();
    let w = graph.total_weight();
    let mut community: Vec<usize> = (0..n).collect();
    let mut totals: Vec<f64> = (0..n).map(|i| graph.degree(i)).collect();
    let mut moved_any = false;
    // Scratch: weight from the current node into each community.
    let mut link = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();
    let tolerance = GAIN_TOLERANCE * w.max(1.0);

    for _ in 0..MAX_SWEEPS {
        let mut moved = false;
        for i in 0..n {
            let own = community[i];
            let k = graph.degree(i);
            totals[own] -= k;

            for &(j, wij) in graph.neighbors(i) {
                let c = community[j];
                if link[c] == 0.0 {
                    touched.push(c);
                }
                link[c] += wij;
            }
            let gain = |c: usize, link_c: f64, totals: &[f64]| link_c - gamma * totals[c] * k / (2.0 * w);
            let own_gain = gain(own, link[own], &totals);

            touched.sort_unstable();
            let mut best = own;
            let mut best_gain = own_gain;
            for &c in &touched {
                if c == own {
                    continue;
                }
                let g = gain(c, link[c], &totals);
                let beats = if best == own {
                    g > own_gain + tolerance
                } else {
                    g > best_gain + tolerance
                };
                if beats {
                    best = c;
                    best_gain = g;
                }
            }
            for &c in &touched {
                link[c] = 0.0;
            }
            touched.clear();

            totals[best] += k;
            if best != own {
                community[i] = best;
                moved = true;
                moved_any = true;
                let delta_q = (best_gain - own_gain) / w;
                debug_assert!(delta_q > 0.0);
                observer(&MoveEvent {
                    level,
                    graph,
                    assignment: &community,
                    node: i,
                    from: own,
                    to: best,
                    delta_q,
                });
            }
        }
        if !moved {
            break;
        }
    }
    (community, moved_any)
}

fn run(
    graph: &WeightedGraph,
    first_order: Vec<usize>,
    rng: &mut ChaCha8Rng,
    gamma: f64,
    observer: &mut dyn FnMut(&MoveEvent<'_>),
) -> (Vec<Vec<usize>>, Vec<f64>) {
    let n = graph.node_count();
    let singletons: Vec<usize> = (0..n).collect();
    let Some(q0) = modularity_indexed(graph, &singletons, gamma) else {
        return (vec![singletons], vec![0.0]);
    };

    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    // Original node -> node of the current level graph.
    let mut membership: Vec<usize> = singletons.clone();
    let mut level_graph = graph.clone();
    let mut order = first_order;

    for level in 0.. {
        let internal = level_graph.permuted(&order);
        let (labels, moved) = local_moving(&internal, gamma, level, observer);
        if !moved {
            break;
        }
        let (labels, count) = canonical_labels(&labels);
        let mut position = vec![0usize; order.len()];
        for (p, &ext) in order.iter().enumerate() {
            position[ext] = p;
        }
        for m in membership.iter_mut() {
            *m = labels[position[*m]];
        }
        let q = modularity_indexed(graph, &membership, gamma).expect("W > 0");
        debug_assert!(q + 1e-12 >= scores.last().copied().unwrap_or(q0), "Q decreased across levels");
        levels.push(membership.clone());
        scores.push(q);

        level_graph = internal.aggregate(&labels, count);
        if count == 1 {
            break;
        }
        order = (0..count).collect();
        order.shuffle(rng);
    }

    if levels.is_empty() {
        levels.push(singletons);
        scores.push(q0);
    }
    (levels, scores)
}

fn partition_from(graph: &CoocGraph, levels: Vec<Vec<usize>>, modularity: Vec<f64>) -> Partition {
    Partition {
        nodes: graph.nodes.keys().cloned().collect(),
        levels,
        modularity,
    }
}

/// Louvain with a seed-determined visit order at every level.
pub fn louvain(graph: &CoocGraph, seed: u64, gamma: f64) -> Partition {
    let (wg, _) = WeightedGraph::from_cooc(graph);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..wg.node_count()).collect();
    order.shuffle(&mut rng);
    let (levels, q) = run(&wg, order, &mut rng, gamma, &mut |_| {});
    partition_from(graph, levels, q)
}

/// Louvain with an explicit first-level visit order (indices into the
/// graph's id-ordered nodes); later levels are shuffled from `seed`.
pub fn louvain_from_order(
    graph: &CoocGraph,
    order: &[usize],
    seed: u64,
    gamma: f64,
) -> Result<Partition, CommunityError> {
    let (wg, _) = WeightedGraph::from_cooc(graph);
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..wg.node_count()).collect::<Vec<_>>() {
        return Err(CommunityError::BadOrder);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (levels, q) = run(&wg, order.to_vec(), &mut rng, gamma, &mut |_| {});
    Ok(partition_from(graph, levels, q))
}

/// Louvain on an index graph, reporting every accepted move. Returns the
/// level assignments and their modularity.
pub fn louvain_observed(
    graph: &WeightedGraph,
    seed: u64,
    gamma: f64,
    observer: &mut dyn FnMut(&MoveEvent<'_>),
) -> (Vec<Vec<usize>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..graph.node_count()).collect();
    order.shuffle(&mut rng);
    run(graph, order, &mut rng, gamma, observer)
}

#[cfg(test)]
mod tests {
    use super::super::tests::barbell;
    use super::*;
    use crate::date::Date;
    use crate::entity::EntityId;
    use crate::graph::{build_cooccurrence, Edge, NodeInfo};
    use alloc::collections::BTreeMap;
    use alloc::format;
    use alloc::string::String;

    pub(crate) fn cooc_from_edges(n: usize, edges: &[(usize, usize, f64)]) -> CoocGraph {
        let name = |i: usize| EntityId::new(format!("n{i:02}"));
        let nodes: BTreeMap<EntityId, NodeInfo> = (0..n)
            .map(|i| {
                (
                    name(i),
                    NodeInfo {
                        display_name: format!("N{i}"),
                        days_mentioned: 1,
                        total_mentions: 1,
                    },
                )
            })
            .collect();
        CoocGraph::from_parts(
            nodes,
            edges.iter().map(|&(a, b, w)| Edge {
                source: name(a),
                target: name(b),
                weight: w as u32,
            }),
        )
        .unwrap()
    }

    #[test]
    fn disconnected_triangles_every_seed() {
        let edges = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)];
        let g = cooc_from_edges(6, &edges);
        for seed in 0..50 {
            let p = louvain(&g, seed, 1.0);
            let top = p.top();
            assert_eq!(p.community_count(), 2, "seed {seed}");
            assert!(top[0] == top[1] && top[1] == top[2]);
            assert!(top[3] == top[4] && top[4] == top[5]);
            assert!(p.is_nested());
        }
    }

    #[test]
    fn barbell_finds_triangles() {
        let g = cooc_from_edges(6, &barbell());
        for seed in 0..20 {
            let p = louvain(&g, seed, 1.0);
            assert_eq!(p.community_count(), 2);
            assert!((p.final_modularity() - 5.0 / 14.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_graphs() {
        let single = build_cooccurrence(
            &[crate::graph::DayMentions {
                date: Date::new(1891, 5, 5).unwrap(),
                entities: alloc::vec!["a".into()],
            }],
            0,
            &BTreeMap::<EntityId, String>::new(),
        );
        let p = louvain(&single, 1, 1.0);
        assert_eq!(p.levels, alloc::vec![alloc::vec![0]]);
        assert_eq!(p.final_modularity(), 0.0);

        let isolated = cooc_from_edges(3, &[]);
        let p = louvain(&isolated, 1, 1.0);
        assert_eq!(p.top(), &[0, 1, 2]);
        assert_eq!(p.final_modularity(), 0.0);

        let empty = CoocGraph::default();
        let p = louvain(&empty, 1, 1.0);
        assert!(p.top().is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let edges: Vec<(usize, usize, f64)> = (0..12)
            .flat_map(|i| [(i, (i + 1) % 12, 1.0), (i, (i + 5) % 12, 2.0)])
            .collect();
        let g = cooc_from_edges(12, &edges);
        assert_eq!(louvain(&g, 9, 1.0), louvain(&g, 9, 1.0));
    }

    #[test]
    fn explicit_order_must_be_a_permutation() {
        let g = cooc_from_edges(3, &[(0, 1, 1.0)]);
        assert_eq!(louvain_from_order(&g, &[0, 0, 1], 0, 1.0), Err(CommunityError::BadOrder));
        assert!(louvain_from_order(&g, &[2, 0, 1], 0, 1.0).is_ok());
    }

    #[test]
    fn higher_resolution_gives_more_communities() {
        let g = cooc_from_edges(6, &barbell());
        let coarse = louvain(&g, 3, 0.1);
        let fine = louvain(&g, 3, 4.0);
        assert!(fine.community_count() >= coarse.community_count());
    }
}
