mod common;

use std::collections::BTreeMap;

use capta_core::layout::{
    count_overlaps, resolve_label_overlaps, run_from, step, LabelBox, LayoutGraph, LayoutParams, LayoutState, Point,
};
use capta_core::EntityId;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = LayoutParams> {
    (
        0.01f64..20.0,
        0.0f64..5.0,
        any::<bool>(),
        any::<bool>(),
        0.0f64..2.0,
        0.05f64..5.0,
    )
        .prop_map(|(repulsion, gravity, strong_gravity, linlog, delta, tol)| LayoutParams {
            repulsion,
            gravity,
            strong_gravity,
            linlog,
            edge_weight_influence: delta,
            jitter_tolerance: tol,
            max_iterations: 60,
            convergence_threshold: 1e-6,
        })
}

fn graph() -> impl Strategy<Value = LayoutGraph> {
    (1usize..30, 0.0f64..0.5, any::<u64>()).prop_map(|(n, p, seed)| {
        let mut rng = common::Rng::new(seed);
        let edges = common::random_edges(&mut rng, n, p, 5)
            .into_iter()
            .map(|(a, b, w)| (a, b, f64::from(w)))
            .collect();
        LayoutGraph::new(n, edges)
    })
}

/// Nodes `2i` and `2i + 1` mirror each other across the y-axis and every
/// edge has its mirror image.
fn mirrored() -> impl Strategy<Value = (LayoutGraph, Vec<Point>)> {
    (1usize..10, any::<u64>()).prop_map(|(k, seed)| {
        let mut rng = common::Rng::new(seed);
        let mut edges = Vec::new();
        for (a, b, w) in common::random_edges(&mut rng, k, 0.4, 3) {
            edges.push((2 * a, 2 * b, f64::from(w)));
            edges.push((2 * a + 1, 2 * b + 1, f64::from(w)));
        }
        for a in 0..k {
            if rng.chance(0.3) {
                edges.push((2 * a, 2 * a + 1, 1.0));
            }
        }
        let mut positions = Vec::new();
        for _ in 0..k {
            let (x, y) = (0.1 + 5.0 * rng.unit(), 10.0 * rng.unit() - 5.0);
            positions.push([x, y]);
            positions.push([-x, y]);
        }
        (LayoutGraph::new(2 * k, edges), positions)
    })
}

fn scale(ps: &[Point]) -> f64 {
    ps.iter().map(|p| p[0].abs().max(p[1].abs())).fold(1.0, f64::max)
}

proptest! {
    #[test]
    fn positions_stay_finite(g in graph(), p in params(), seed: u64) {
        let (state, result) = run_from(LayoutState::random(g.node_count(), seed), &g, &p).unwrap();
        for q in &state.positions {
            prop_assert!(q[0].is_finite() && q[1].is_finite(), "{q:?}");
        }
        prop_assert!(result.final_mean_displacement.is_finite());
        prop_assert!(state.speed.is_finite() && state.speed >= 0.0);
    }

    #[test]
    fn coincident_starts_stay_finite(n in 2usize..12, p in params(), seed: u64) {
        let edges = (1..n).map(|i| (0, i, 1.0)).collect();
        let g = LayoutGraph::new(n, edges);
        let state = LayoutState::new(vec![[0.5, -0.5]; n], seed);
        let (state, _) = run_from(state, &g, &p).unwrap();
        for q in &state.positions {
            prop_assert!(q[0].is_finite() && q[1].is_finite());
        }
    }

    #[test]
    fn a_step_preserves_mirror_symmetry((g, start) in mirrored(), p in params()) {
        let mut state = LayoutState::new(start, 7);
        for _ in 0..5 {
            step(&mut state, &g, &p).unwrap();
            let tol = 1e-9 * scale(&state.positions);
            for pair in state.positions.chunks(2) {
                prop_assert!((pair[0][0] + pair[1][0]).abs() <= tol, "{pair:?}");
                prop_assert!((pair[0][1] - pair[1][1]).abs() <= tol, "{pair:?}");
            }
        }
    }

    #[test]
    fn centroid_is_fixed_without_gravity(g in graph(), p in params(), seed: u64) {
        let p = LayoutParams { gravity: 0.0, ..p };
        let mut state = LayoutState::random(g.node_count(), seed);
        for _ in 0..40 {
            let before = state.centroid();
            step(&mut state, &g, &p).unwrap();
            let after = state.centroid();
            let tol = 1e-9 * scale(&state.positions);
            prop_assert!((after[0] - before[0]).abs() <= tol && (after[1] - before[1]).abs() <= tol,
                "{before:?} -> {after:?}");
        }
    }

    #[test]
    fn runs_are_bit_identical(g in graph(), p in params(), seed: u64) {
        let a = run_from(LayoutState::random(g.node_count(), seed), &g, &p).unwrap().0;
        let b = run_from(LayoutState::random(g.node_count(), seed), &g, &p).unwrap().0;
        let bits = |s: &LayoutState| s.positions.iter().flat_map(|q| [q[0].to_bits(), q[1].to_bits()]).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn separated_labels_are_left_alone(cols in 1usize..6, rows in 1usize..6, w in 0.5f64..3.0, h in 0.5f64..2.0, seed: u64) {
        let mut positions = BTreeMap::new();
        let mut boxes = BTreeMap::new();
        for r in 0..rows {
            for c in 0..cols {
                let id = EntityId::new(format!("n{r}{c}"));
                positions.insert(id.clone(), [c as f64 * (w + 0.01), r as f64 * (h + 0.01)]);
                boxes.insert(id, LabelBox { width: w, height: h });
            }
        }
        let out = resolve_label_overlaps(&positions, &boxes, 50, seed).unwrap();
        prop_assert_eq!(out.initial_overlaps, 0);
        prop_assert_eq!(out.positions, positions);
    }

    #[test]
    fn reported_overlaps_match_an_independent_count(
        items in prop::collection::vec(((-5.0f64..5.0, -5.0f64..5.0), 0.2f64..3.0, 0.2f64..2.0), 1..25),
        passes in 0u32..60,
        seed: u64,
    ) {
        let mut positions = BTreeMap::new();
        let mut boxes = BTreeMap::new();
        for (i, ((x, y), w, h)) in items.iter().enumerate() {
            let id = EntityId::new(format!("n{i:02}"));
            positions.insert(id.clone(), [*x, *y]);
            boxes.insert(id, LabelBox { width: *w, height: *h });
        }
        let out = resolve_label_overlaps(&positions, &boxes, passes, seed).unwrap();
        let oracle = |ps: &BTreeMap<EntityId, Point>| {
            let flat: Vec<(Point, f64, f64)> = ps.iter().map(|(id, p)| (*p, boxes[id].width, boxes[id].height)).collect();
            common::overlapping_pairs(&flat)
        };
        prop_assert_eq!(out.initial_overlaps, oracle(&positions));
        prop_assert_eq!(out.remaining_overlaps, oracle(&out.positions));
        prop_assert_eq!(out.remaining_overlaps, count_overlaps(&out.positions, &boxes).unwrap());
        prop_assert!(out.overlaps_per_pass.len() <= passes as usize);
        prop_assert!(out.positions.values().all(|p| p[0].is_finite() && p[1].is_finite()));
    }
}
