mod common;

use std::collections::BTreeMap;

use capta_core::communities::{
    louvain, louvain_from_order, louvain_observed, modularity, modularity_indexed, WeightedGraph,
};
use capta_core::graph::{CoocGraph, Edge, NodeInfo};
use capta_core::EntityId;
use proptest::prelude::*;

fn name(i: usize) -> EntityId {
    EntityId::new(format!("n{i:02}"))
}

fn cooc(n: usize, edges: &[(usize, usize, u32)], names: impl Fn(usize) -> EntityId) -> CoocGraph {
    let nodes: BTreeMap<EntityId, NodeInfo> = (0..n)
        .map(|i| {
            (
                names(i),
                NodeInfo {
                    display_name: format!("N{i}"),
                    days_mentioned: 1,
                    total_mentions: 1,
                },
            )
        })
        .collect();
    let edges = edges.iter().map(|&(a, b, w)| {
        let (s, t) = (names(a), names(b));
        let (source, target) = if s < t { (s, t) } else { (t, s) };
        Edge { source, target, weight: w }
    });
    CoocGraph::from_parts(nodes, edges).unwrap()
}

fn graphs() -> impl Strategy<Value = (usize, Vec<(usize, usize, u32)>)> {
    (1usize..24, 0.05f64..0.7, any::<u64>()).prop_map(|(n, p, seed)| {
        let mut rng = common::Rng::new(seed);
        (n, common::random_edges(&mut rng, n, p, 4))
    })
}

fn float_edges(edges: &[(usize, usize, u32)]) -> Vec<(usize, usize, f64)> {
    edges.iter().map(|&(a, b, w)| (a, b, f64::from(w))).collect()
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut fwd = BTreeMap::new();
    let mut back = BTreeMap::new();
    a.iter().zip(b).all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

proptest! {
    #[test]
    fn never_worse_than_singletons((n, edges) in graphs(), seed: u64) {
        let g = cooc(n, &edges, name);
        let p = louvain(&g, seed, 1.0);
        let singletons: Vec<usize> = (0..n).collect();
        match common::direct_modularity(n, &float_edges(&edges), &singletons, 1.0) {
            None => prop_assert_eq!(p.final_modularity(), 0.0),
            Some(q0) => prop_assert!(p.final_modularity() >= q0 - 1e-12),
        }
    }

    #[test]
    fn reported_modularity_matches_direct_sum((n, edges) in graphs(), seed: u64) {
        let g = cooc(n, &edges, name);
        let p = louvain(&g, seed, 1.0);
        let fe = float_edges(&edges);
        for (level, q) in p.levels.iter().zip(&p.modularity) {
            let direct = common::direct_modularity(n, &fe, level, 1.0).unwrap_or(0.0);
            prop_assert!((direct - q).abs() < 1e-9, "{direct} vs {q}");
        }
        let assignment = p.assignment();
        if !edges.is_empty() {
            let q = modularity(&g, &assignment, 1.0).unwrap();
            prop_assert!((q - p.final_modularity()).abs() < 1e-12);
        }
    }

    #[test]
    fn levels_never_lose_modularity((n, edges) in graphs(), seed: u64, gamma in 0.2f64..2.0) {
        let p = louvain(&cooc(n, &edges, name), seed, gamma);
        for w in p.modularity.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        prop_assert!(p.is_nested());
    }

    #[test]
    fn every_accepted_move_raises_modularity((n, edges) in graphs(), seed: u64, gamma in 0.2f64..2.0) {
        let wg = WeightedGraph::from_edges(n, &float_edges(&edges));
        let mut last: Option<(usize, f64)> = None;
        let mut failures = Vec::new();
        louvain_observed(&wg, seed, gamma, &mut |ev| {
            let level_edges: Vec<(usize, usize, f64)> = (0..ev.graph.node_count())
                .flat_map(|i| {
                    let own = (ev.graph.self_loop(i) > 0.0).then(|| (i, i, ev.graph.self_loop(i)));
                    own.into_iter().chain(ev.graph.neighbors(i).iter().filter(move |(j, _)| *j > i).map(move |&(j, w)| (i, j, w)))
                })
                .collect();
            let m = ev.graph.node_count();
            let before = match last {
                Some((level, q)) if level == ev.level => q,
                _ => {
                    let mut prior = ev.assignment.to_vec();
                    prior[ev.node] = ev.from;
                    common::direct_modularity(m, &level_edges, &prior, gamma).unwrap()
                }
            };
            let after = common::direct_modularity(m, &level_edges, ev.assignment, gamma).unwrap();
            if after < before - 1e-12 || (after - before - ev.delta_q).abs() > 1e-9 {
                failures.push((ev.level, ev.node, before, after, ev.delta_q));
            }
            last = Some((ev.level, after));
        });
        prop_assert!(failures.is_empty(), "{failures:?}");
    }

    #[test]
    fn relabeling_nodes_relabels_the_partition((n, edges) in graphs(), seed: u64, perm_seed: u64) {
        let mut rng = common::Rng::new(perm_seed);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.below(i as u64 + 1) as usize);
        }
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.below(i as u64 + 1) as usize);
        }
        let g = cooc(n, &edges, name);
        let renamed = cooc(n, &edges, |i| name(perm[i]));
        let moved_order: Vec<usize> = order.iter().map(|&i| perm[i]).collect();
        let a = louvain_from_order(&g, &order, seed, 1.0).unwrap();
        let b = louvain_from_order(&renamed, &moved_order, seed, 1.0).unwrap();
        let top_a: Vec<usize> = (0..n).map(|i| a.top()[i]).collect();
        let top_b: Vec<usize> = (0..n).map(|i| b.top()[perm[i]]).collect();
        prop_assert!(same_partition(&top_a, &top_b), "{top_a:?} vs {top_b:?}");
        prop_assert!((a.final_modularity() - b.final_modularity()).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_partition((n, edges) in graphs(), seed: u64) {
        let g = cooc(n, &edges, name);
        prop_assert_eq!(louvain(&g, seed, 1.0), louvain(&g, seed, 1.0));
    }
}

#[test]
fn disconnected_triangles_stay_apart_for_any_seed() {
    let edges = [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1)];
    let g = cooc(6, &edges, name);
    for seed in 0..50 {
        let p = louvain(&g, seed, 1.0);
        let top = p.top();
        assert_eq!(p.community_count(), 2, "seed {seed}");
        assert!(top[0] == top[1] && top[1] == top[2] && top[3] == top[4] && top[4] == top[5]);
        assert_ne!(top[0], top[3]);
    }
}

#[test]
fn indexed_and_direct_modularity_agree_on_self_loops() {
    let edges = [(0, 0, 2.0), (0, 1, 1.0), (1, 2, 3.0), (2, 2, 0.5)];
    let wg = WeightedGraph::from_edges(3, &edges);
    for labels in [[0, 0, 0], [0, 1, 1], [0, 1, 2], [0, 0, 1]] {
        let a = modularity_indexed(&wg, &labels, 1.0).unwrap();
        let b = common::direct_modularity(3, &edges, &labels, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12, "{labels:?}: {a} vs {b}");
    }
}
