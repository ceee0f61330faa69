//! Independent reference implementations shared by the property tests and
//! the acceptance suite. Nothing here calls into the algorithm under test.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

/// SplitMix64; enough randomness for fixture generation without pulling a
/// generator into the comparison.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

/// Undirected simple graph on `n` nodes with independent edges.
pub fn random_edges(rng: &mut Rng, n: usize, p: f64, max_weight: u32) -> Vec<(usize, usize, u32)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.chance(p) {
                edges.push((a, b, 1 + rng.below(u64::from(max_weight)) as u32));
            }
        }
    }
    edges
}

/// Pairwise day counts from a plain double loop: for every date and every
/// ordered pair of distinct entities mentioned on it, mark the pair.
pub fn brute_force_cooccurrence(
    days: &[(i64, Vec<String>)],
) -> (BTreeMap<(String, String), u32>, BTreeMap<String, u32>) {
    let mut dates: BTreeSet<i64> = BTreeSet::new();
    for (d, _) in days {
        dates.insert(*d);
    }
    let mut pairs = BTreeMap::new();
    let mut per_node = BTreeMap::new();
    for date in dates {
        let mut present: Vec<&String> = Vec::new();
        for (d, ids) in days {
            if *d == date {
                present.extend(ids.iter());
            }
        }
        let mut seen_node = BTreeSet::new();
        for a in &present {
            if seen_node.insert(a.to_string()) {
                *per_node.entry(a.to_string()).or_insert(0) += 1;
            }
        }
        let mut seen_pair = BTreeSet::new();
        for a in &present {
            for b in &present {
                if a < b && seen_pair.insert(((*a).clone(), (*b).clone())) {
                    *pairs.entry(((*a).clone(), (*b).clone())).or_insert(0) += 1;
                }
            }
        }
    }
    (pairs, per_node)
}

/// `(1/2W) sum_ij [A_ij - gamma k_i k_j / 2W] delta(c_i, c_j)` on a dense
/// matrix. Self-loops enter the diagonal twice, matching the degree
/// convention. `None` when the graph has no weight.
pub fn direct_modularity(n: usize, edges: &[(usize, usize, f64)], labels: &[usize], gamma: f64) -> Option<f64> {
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
    if two_w <= 0.0 {
        return None;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - gamma * k[i] * k[j] / two_w;
            }
        }
    }
    Some(q / two_w)
}

/// Best modularity over every set partition, enumerated by recursive
/// assignment to an existing block or a new one.
pub fn best_modularity(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    fn go(i: usize, n: usize, blocks: usize, labels: &mut Vec<usize>, edges: &[(usize, usize, f64)], best: &mut f64) {
        if i == n {
            let q = direct_modularity(n, edges, labels, 1.0).unwrap_or(0.0);
            if q > *best {
                *best = q;
            }
            return;
        }
        for b in 0..=blocks {
            labels.push(b);
            go(i + 1, n, blocks.max(b + 1), labels, edges, best);
            labels.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    go(0, n, 0, &mut Vec::new(), edges, &mut best);
    best
}

/// Equilibrium separation of two connected nodes without gravity: the point
/// where `w^delta * d` equals `k_r * m_a * m_b / d`.
pub fn two_node_equilibrium(k_r: f64, mass_a: f64, mass_b: f64, weight: f64, delta: f64) -> f64 {
    (k_r * mass_a * mass_b / weight.powf(delta)).sqrt()
}

/// Strictly overlapping axis-aligned boxes, counted over unordered pairs.
pub fn overlapping_pairs(boxes: &[([f64; 2], f64, f64)]) -> usize {
    let mut count = 0;
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            let (p, w1, h1) = boxes[i];
            let (q, w2, h2) = boxes[j];
            if (p[0] - q[0]).abs() < (w1 + w2) / 2.0 && (p[1] - q[1]).abs() < (h1 + h2) / 2.0 {
                count += 1;
            }
        }
    }
    count
}

use capta_core::resolution::{Decision, DecisionKind};
use capta_core::EntityId;

const FORMS: [&str; 10] = [
    "ali", "basil", "cowley", "dawud", "elias", "faris", "henry lynch", "johnny", "Bad Form", "",
];

fn pick<'a>(rng: &mut Rng, items: &[&'a str]) -> &'a str {
    items[rng.below(items.len() as u64) as usize]
}

fn pick_id(rng: &mut Rng) -> EntityId {
    EntityId::new(format!("e{}", rng.below(6)))
}

/// A decision over a small universe of ids and forms, so that conflicts,
/// missing ids, bad forms and missing rationales all occur often.
pub fn random_decision(rng: &mut Rng) -> Decision {
    let kind = match rng.below(6) {
        0 | 1 => DecisionKind::NewEntity {
            id: rng.chance(0.8).then(|| pick_id(rng)),
            display_name: pick(rng, &["Ali", "Basil Cowley", "Dawud", " ", "Henry Lynch"]).to_string(),
            aliases: (0..rng.below(3)).map(|_| pick(rng, &FORMS).to_string()).collect(),
        },
        2 => DecisionKind::MapTo {
            form: pick(rng, &FORMS).to_string(),
            entity: pick_id(rng),
        },
        3 => DecisionKind::Merge {
            into: pick_id(rng),
            from: pick_id(rng),
        },
        4 => DecisionKind::Split {
            entity: pick_id(rng),
            aliases: (0..1 + rng.below(2)).map(|_| pick(rng, &FORMS).to_string()).collect(),
            new_id: pick_id(rng),
            display_name: pick(rng, &["Split", ""]).to_string(),
        },
        _ => DecisionKind::Ignore {
            form: pick(rng, &FORMS).to_string(),
        },
    };
    Decision {
        kind,
        actor: pick(rng, &["curator", "curator", "curator", ""]).to_string(),
        rationale: pick(rng, &["seen in letters", "same person", "same person", " "]).to_string(),
        timestamp: format!("2026-01-01T00:00:{:02}Z", rng.below(60)),
    }
}
