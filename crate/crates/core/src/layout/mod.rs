//! ForceAtlas2 layout with adaptive speed, plus label overlap removal.

pub mod constants;
mod forces;
mod labels;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::entity::EntityId;
use crate::graph::CoocGraph;

use constants::{
    COINCIDENT_JITTER, INITIAL_SPEED, MAX_NODE_DISPLACEMENT, MAX_SPEED_RISE, NODE_SPEED_SCALE,
};
pub use forces::compute_forces;
pub use labels::{count_overlaps, overlapping, resolve_label_overlaps, LabelAdjustment, LabelBox, LabelParams};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LayoutError {
    #[error("invalid layout parameter {name}: {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("no label box for node {0}")]
    MissingBox(EntityId),
    #[error("no position for node {0}")]
    MissingPosition(EntityId),
    #[error("state has {state} positions but graph has {graph} nodes")]
    SizeMismatch { state: usize, graph: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutParams {
    /// `k_r`
    pub repulsion: f64,
    /// `k_g`; zero disables gravity.
    pub gravity: f64,
    pub strong_gravity: bool,
    pub linlog: bool,
    /// Exponent `delta` applied to edge weights in attraction.
    pub edge_weight_influence: f64,
    /// `tau`
    pub jitter_tolerance: f64,
    pub max_iterations: u32,
    /// Stop once the mean displacement per node falls below this.
    pub convergence_threshold: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            repulsion: 2.0,
            gravity: 1.0,
            strong_gravity: false,
            linlog: false,
            edge_weight_influence: 1.0,
            jitter_tolerance: 1.0,
            max_iterations: 2000,
            convergence_threshold: 1e-3,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let check = |name, value: f64, ok: bool| {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(LayoutError::InvalidParam { name, value })
            }
        };
        check("repulsion", self.repulsion, self.repulsion > 0.0)?;
        check("gravity", self.gravity, self.gravity >= 0.0)?;
        check("edge_weight_influence", self.edge_weight_influence, self.edge_weight_influence >= 0.0)?;
        check("jitter_tolerance", self.jitter_tolerance, self.jitter_tolerance > 0.0)?;
        check("convergence_threshold", self.convergence_threshold, self.convergence_threshold >= 0.0)?;
        Ok(())
    }
}

/// Index-based view of a graph for the layout. Mass of node `i` is `deg(i) + 1`
/// with the unweighted degree.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutGraph {
    pub ids: Vec<EntityId>,
    pub edges: Vec<(usize, usize, f64)>,
    degree: Vec<usize>,
}

impl LayoutGraph {
    pub fn new(node_count: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let ids = (0..node_count).map(|i| EntityId::new(alloc::format!("n{i}"))).collect();
        Self::with_ids(ids, edges)
    }

    pub fn with_ids(ids: Vec<EntityId>, edges: Vec<(usize, usize, f64)>) -> Self {
        let mut degree = vec![0; ids.len()];
        for &(a, b, _) in &edges {
            assert!(a < ids.len() && b < ids.len() && a != b, "edge endpoints out of range");
            degree[a] += 1;
            degree[b] += 1;
        }
        Self { ids, edges, degree }
    }

    /// Nodes in id order.
    pub fn from_cooc(graph: &CoocGraph) -> Self {
        let ids: Vec<EntityId> = graph.nodes.keys().cloned().collect();
        let index: BTreeMap<&EntityId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let edges = graph
            .edges
            .iter()
            .map(|e| (index[&e.source], index[&e.target], e.weight as f64))
            .collect();
        Self::with_ids(ids, edges)
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degree[i]
    }

    pub fn mass(&self, i: usize) -> f64 {
        (self.degree[i] + 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutState {
    pub positions: Vec<Point>,
    pub previous_forces: Vec<Point>,
    pub speed: f64,
    pub iteration: u64,
    pub seed: u64,
}

impl LayoutState {
    pub fn new(positions: Vec<Point>, seed: u64) -> Self {
        let n = positions.len();
        Self {
            positions,
            previous_forces: vec![[0.0, 0.0]; n],
            speed: INITIAL_SPEED,
            iteration: 0,
            seed,
        }
    }

    /// Positions drawn uniformly from the unit disk.
    pub fn random(node_count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..node_count)
            .map(|_| {
                let r = libm::sqrt(rng.gen::<f64>());
                let theta = 2.0 * core::f64::consts::PI * rng.gen::<f64>();
                [r * libm::cos(theta), r * libm::sin(theta)]
            })
            .collect();
        Self::new(positions, seed)
    }

    pub fn centroid(&self) -> Point {
        centroid(&self.positions)
    }
}

pub fn centroid(positions: &[Point]) -> Point {
    if positions.is_empty() {
        return [0.0, 0.0];
    }
    let n = positions.len() as f64;
    let (sx, sy) = positions.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    [sx / n, sy / n]
}

/// Angle derived from the seed and the given words, independent of any RNG stream.
pub(crate) fn hashed_angle(seed: u64, words: &[u64]) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for w in words {
        h.update(w.to_le_bytes());
    }
    let out = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&out[..8]);
    let unit = (u64::from_le_bytes(b) >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * core::f64::consts::PI * unit
}

/// Spread every group of exactly coincident nodes onto a tiny circle around
/// the shared point. Group centroids are unchanged.
fn separate_coincident(state: &mut LayoutState) {
    let mut order: Vec<usize> = (0..state.positions.len()).collect();
    let key = |p: &Point| (p[0].to_bits(), p[1].to_bits());
    order.sort_by_key(|&i| (key(&state.positions[i]), i));
    let mut start = 0;
    while start < order.len() {
        let p = state.positions[order[start]];
        let mut end = start + 1;
        while end < order.len() && state.positions[order[end]] == p {
            end += 1;
        }
        let m = end - start;
        if m > 1 {
            let theta = hashed_angle(state.seed, &[state.iteration, order[start] as u64]);
            for (k, &i) in order[start..end].iter().enumerate() {
                let a = theta + 2.0 * core::f64::consts::PI * k as f64 / m as f64;
                let r = COINCIDENT_JITTER * p[0].abs().max(p[1].abs()).max(1.0);
                state.positions[i] = [p[0] + r * libm::cos(a), p[1] + r * libm::sin(a)];
            }
        }
        start = end;
    }
}

fn norm(p: Point) -> f64 {
    libm::sqrt(p[0] * p[0] + p[1] * p[1])
}

/// Outcome of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub mean_displacement: f64,
    pub speed: f64,
}

/// Advance the layout by one iteration in place.
pub fn step(state: &mut LayoutState, graph: &LayoutGraph, params: &LayoutParams) -> Result<StepReport, LayoutError> {
    params.validate()?;
    let n = graph.node_count();
    if state.positions.len() != n || state.previous_forces.len() != n {
        return Err(LayoutError::SizeMismatch {
            state: state.positions.len(),
            graph: n,
        });
    }
    if n == 0 {
        state.iteration += 1;
        return Ok(StepReport {
            mean_displacement: 0.0,
            speed: state.speed,
        });
    }
    let before = state.centroid();
    separate_coincident(state);
    let forces = compute_forces(&state.positions, graph, params);

    let mut swings = vec![0.0; n];
    let (mut global_swing, mut global_traction) = (0.0, 0.0);
    for i in 0..n {
        let (f, g) = (forces[i], state.previous_forces[i]);
        let swing = norm([f[0] - g[0], f[1] - g[1]]);
        let traction = norm([f[0] + g[0], f[1] + g[1]]) / 2.0;
        swings[i] = swing;
        global_swing += graph.mass(i) * swing;
        global_traction += graph.mass(i) * traction;
    }
    let ceiling = state.speed * (1.0 + MAX_SPEED_RISE);
    let speed = if global_swing > 0.0 {
        let target = params.jitter_tolerance * global_traction / global_swing;
        if state.iteration == 0 {
            target
        } else {
            target.min(ceiling)
        }
    } else {
        ceiling
    };

    let mut displacement = vec![[0.0, 0.0]; n];
    for i in 0..n {
        let f = forces[i];
        let magnitude = norm(f);
        if magnitude == 0.0 {
            continue;
        }
        let node_speed = (NODE_SPEED_SCALE * speed / (1.0 + speed * libm::sqrt(swings[i])))
            .min(MAX_NODE_DISPLACEMENT / magnitude);
        displacement[i] = [node_speed * f[0], node_speed * f[1]];
    }
    if params.gravity == 0.0 {
        // Without gravity the layout is translation-free; pin the centroid.
        let shift = centroid(&displacement);
        let jitter_shift = {
            let c = state.centroid();
            [c[0] - before[0], c[1] - before[1]]
        };
        for d in &mut displacement {
            d[0] -= shift[0] + jitter_shift[0];
            d[1] -= shift[1] + jitter_shift[1];
        }
    }
    let mut total = 0.0;
    for (p, d) in state.positions.iter_mut().zip(&displacement) {
        p[0] += d[0];
        p[1] += d[1];
        total += norm(*d);
    }
    state.previous_forces = forces;
    state.speed = speed;
    state.iteration += 1;
    Ok(StepReport {
        mean_displacement: total / n as f64,
        speed,
    })
}

/// Pure form of [`step`].
pub fn fa2_step(state: &LayoutState, graph: &LayoutGraph, params: &LayoutParams) -> Result<LayoutState, LayoutError> {
    let mut next = state.clone();
    step(&mut next, graph, params)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutResult {
    pub positions: BTreeMap<EntityId, Point>,
    pub iterations: u32,
    pub converged: bool,
    pub final_mean_displacement: f64,
}

/// Run from `state` until convergence or the iteration cap.
pub fn run_from(
    mut state: LayoutState,
    graph: &LayoutGraph,
    params: &LayoutParams,
) -> Result<(LayoutState, LayoutResult), LayoutError> {
    params.validate()?;
    let mut iterations = 0;
    let mut converged = graph.node_count() == 0;
    let mut last = 0.0;
    while !converged && iterations < params.max_iterations {
        let report = step(&mut state, graph, params)?;
        iterations += 1;
        last = report.mean_displacement;
        converged = last < params.convergence_threshold;
    }
    let positions = graph.ids.iter().cloned().zip(state.positions.iter().copied()).collect();
    Ok((
        state,
        LayoutResult {
            positions,
            iterations,
            converged,
            final_mean_displacement: last,
        },
    ))
}

/// Lay out a co-occurrence graph from seeded random initial positions.
pub fn fa2_run(graph: &CoocGraph, params: &LayoutParams, seed: u64) -> Result<LayoutResult, LayoutError> {
    let g = LayoutGraph::from_cooc(graph);
    let state = LayoutState::random(g.node_count(), seed);
    run_from(state, &g, params).map(|(_, r)| r)
}
