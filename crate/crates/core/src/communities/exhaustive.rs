//! Exhaustive modularity maximization for tiny graphs, used as an oracle.

use alloc::vec;
use alloc::vec::Vec;

use super::{modularity_indexed, CommunityError, Partition, WeightedGraph};
use crate::graph::CoocGraph;

/// Bell(10) = 115 975 partitions; beyond this the search is refused.
pub const MAX_EXHAUSTIVE_NODES: usize = 10;

/// Visit every set partition of `0..n` as a restricted growth string, in
/// lexicographic order.
fn for_each_partition(n: usize, mut visit: impl FnMut(&[usize])) {
    if n == 0 {
        visit(&[]);
        return;
    }
    let mut a = vec![0usize; n];
    // max_prefix[i] = max(a[0..i]).
    let mut max_prefix = vec![0usize; n];
    loop {
        visit(&a);
        // Find the rightmost position that can be incremented.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return;
            }
            if a[i] <= max_prefix[i] {
                break;
            }
            i -= 1;
        }
        a[i] += 1;
        for j in i + 1..n {
            max_prefix[j] = max_prefix[j - 1].max(a[j - 1]);
            a[j] = 0;
        }
    }
}

/// The modularity-maximizing partition over all set partitions. Among
/// partitions within 1e-12 of the best, the lexicographically smallest
/// restricted growth string wins. Graphs without edges return singletons
/// with Q = 0.
pub fn brute_force_best_partition(graph: &CoocGraph) -> Result<(Partition, f64), CommunityError> {
    let (wg, ids) = WeightedGraph::from_cooc(graph);
    let n = wg.node_count();
    if n > MAX_EXHAUSTIVE_NODES {
        return Err(CommunityError::TooLarge(n));
    }
    if wg.total_weight() <= 0.0 {
        let p = Partition::singletons(ids);
        return Ok((p, 0.0));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_partition(n, |labels| {
        let q = modularity_indexed(&wg, labels, 1.0).expect("W > 0");
        if best.as_ref().is_none_or(|(_, b)| q > *b + 1e-12) {
            best = Some((labels.to_vec(), q));
        }
    });
    let (labels, q) = best.expect("at least one partition");
    Ok((
        Partition {
            nodes: ids,
            levels: vec![labels],
            modularity: vec![q],
        },
        q,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::tests::barbell;
    use super::*;
    use crate::entity::EntityId;
    use crate::graph::{Edge, NodeInfo};
    use alloc::collections::BTreeMap;
    use alloc::format;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> CoocGraph {
        let name = |i: usize| EntityId::new(format!("n{i:02}"));
        let nodes: BTreeMap<EntityId, NodeInfo> = (0..n)
            .map(|i| (name(i), NodeInfo { display_name: format!("N{i}"), days_mentioned: 1, total_mentions: 1 }))
            .collect();
        CoocGraph::from_parts(nodes, edges.iter().map(|&(a, b, w)| Edge { source: name(a), target: name(b), weight: w as u32 })).unwrap()
    }

    #[test]
    fn enumerates_bell_numbers() {
        for (n, bell) in [(0, 1), (1, 1), (2, 2), (3, 5), (4, 15), (5, 52), (6, 203), (8, 4140)] {
            let mut count = 0;
            for_each_partition(n, |_| count += 1);
            assert_eq!(count, bell, "n = {n}");
        }
    }

    #[test]
    fn two_connected_nodes() {
        let (p, q) = brute_force_best_partition(&graph(2, &[(0, 1, 1.0)])).unwrap();
        assert_eq!(q, 0.0);
        assert_eq!(p.top(), &[0, 0]);
    }

    #[test]
    fn barbell_optimum() {
        let (p, q) = brute_force_best_partition(&graph(6, &barbell())).unwrap();
        assert!((q - 5.0 / 14.0).abs() < 1e-12);
        assert_eq!(p.top(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn four_cycle_regression() {
        // Frozen from this oracle: Q* = 0. The single community and the
        // adjacent pairs {0,1},{2,3} (2 * (1/4 - (4/8)^2) = 0) tie, and the
        // tie-break keeps the first restricted growth string.
        let c4 = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)];
        let (p, q) = brute_force_best_partition(&graph(4, &c4)).unwrap();
        assert!(q.abs() < 1e-15);
        assert_eq!(p.top(), &[0, 0, 0, 0]);
    }

    #[test]
    fn refuses_large_graphs() {
        assert_eq!(brute_force_best_partition(&graph(11, &[])).unwrap_err(), CommunityError::TooLarge(11));
    }
}
