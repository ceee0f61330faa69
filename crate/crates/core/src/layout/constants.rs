//! Frozen ForceAtlas2 adaptive-speed constants (Jacomy et al. 2014 defaults).
//! Changing any of these changes every layout.

/// Scale of each node's speed relative to the global speed (`k_s`).
pub const NODE_SPEED_SCALE: f64 = 0.1;
/// Cap on a node's displacement per step (`k_s max`): speed <= cap / |F|.
pub const MAX_NODE_DISPLACEMENT: f64 = 10.0;
/// The global speed may rise by at most this fraction per step.
pub const MAX_SPEED_RISE: f64 = 0.5;
/// Global speed before the first step.
pub const INITIAL_SPEED: f64 = 1.0;

/// Radius used to separate coincident nodes.
pub const COINCIDENT_JITTER: f64 = 1e-6;
/// Repulsion treats closer pairs as this far apart.
pub const MIN_DISTANCE: f64 = 1e-9;

/// Exact pairwise repulsion up to this many nodes, Barnes-Hut above.
pub const BARNES_HUT_NODE_THRESHOLD: usize = 1000;
pub const BARNES_HUT_THETA: f64 = 1.2;
