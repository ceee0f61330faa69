use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::constants::{BARNES_HUT_NODE_THRESHOLD, BARNES_HUT_THETA, MIN_DISTANCE};
use super::{LayoutGraph, LayoutParams, Point};

fn add(a: &mut Point, dx: f64, dy: f64) {
    a[0] += dx;
    a[1] += dy;
}

/// Net force on every node for the given positions.
pub fn compute_forces(positions: &[Point], graph: &LayoutGraph, params: &LayoutParams) -> Vec<Point> {
    let n = positions.len();
    let mut forces = vec![[0.0, 0.0]; n];
    let mass = |i: usize| graph.mass(i);

    if n > BARNES_HUT_NODE_THRESHOLD {
        let tree = QuadTree::build(positions, &mass);
        for (i, f) in forces.iter_mut().enumerate() {
            tree.repulse(i, positions[i], mass(i), params.repulsion, positions, &mass, f);
        }
    } else {
        for i in 0..n {
            for j in i + 1..n {
                let dx = positions[i][0] - positions[j][0];
                let dy = positions[i][1] - positions[j][1];
                let d = libm::sqrt(dx * dx + dy * dy);
                if d == 0.0 {
                    continue;
                }
                // F_r = k_r (deg_i + 1)(deg_j + 1) / d along the unit vector.
                let f = params.repulsion * mass(i) * mass(j) / d.max(MIN_DISTANCE);
                let (ux, uy) = (dx / d, dy / d);
                add(&mut forces[i], ux * f, uy * f);
                add(&mut forces[j], -ux * f, -uy * f);
            }
        }
    }

    for &(a, b, w) in &graph.edges {
        let dx = positions[a][0] - positions[b][0];
        let dy = positions[a][1] - positions[b][1];
        let d = libm::sqrt(dx * dx + dy * dy);
        if d == 0.0 {
            continue;
        }
        let strength = if params.edge_weight_influence == 0.0 {
            1.0
        } else {
            libm::pow(w, params.edge_weight_influence)
        };
        let f = if params.linlog {
            strength * libm::log1p(d)
        } else {
            strength * d
        };
        let (ux, uy) = (dx / d, dy / d);
        add(&mut forces[a], -ux * f, -uy * f);
        add(&mut forces[b], ux * f, uy * f);
    }

    if params.gravity > 0.0 {
        for (i, f) in forces.iter_mut().enumerate() {
            let [x, y] = positions[i];
            let d = libm::sqrt(x * x + y * y);
            if d == 0.0 {
                continue;
            }
            let g = params.gravity * mass(i);
            if params.strong_gravity {
                add(f, -x * g, -y * g);
            } else {
                add(f, -x / d * g, -y / d * g);
            }
        }
    }
    forces
}

const MAX_DEPTH: usize = 48;

enum Cell {
    Empty,
    Leaf(Vec<usize>),
    Split(Box<[QuadTree; 4]>),
}

/// Point-mass quadtree for approximate repulsion.
struct QuadTree {
    center: Point,
    half: f64,
    mass: f64,
    mass_center: Point,
    cell: Cell,
}

impl QuadTree {
    fn new(center: Point, half: f64) -> Self {
        Self {
            center,
            half,
            mass: 0.0,
            mass_center: [0.0, 0.0],
            cell: Cell::Empty,
        }
    }

    fn build(positions: &[Point], mass: &dyn Fn(usize) -> f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in positions {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let half = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / 2.0).max(1e-12) * 1.000_001;
        let mut root = QuadTree::new(center, half);
        for i in 0..positions.len() {
            root.insert(i, positions, mass, 0);
        }
        root
    }

    fn quadrant(&self, p: Point) -> usize {
        usize::from(p[0] >= self.center[0]) + 2 * usize::from(p[1] >= self.center[1])
    }

    fn child_center(&self, q: usize) -> Point {
        let h = self.half / 2.0;
        [
            self.center[0] + if q & 1 == 1 { h } else { -h },
            self.center[1] + if q & 2 == 2 { h } else { -h },
        ]
    }

    fn insert(&mut self, i: usize, positions: &[Point], mass: &dyn Fn(usize) -> f64, depth: usize) {
        let m = mass(i);
        let p = positions[i];
        let total = self.mass + m;
        self.mass_center = [
            (self.mass_center[0] * self.mass + p[0] * m) / total,
            (self.mass_center[1] * self.mass + p[1] * m) / total,
        ];
        self.mass = total;
        match &mut self.cell {
            Cell::Empty => self.cell = Cell::Leaf(vec![i]),
            Cell::Leaf(items) if depth >= MAX_DEPTH => items.push(i),
            Cell::Leaf(items) => {
                let existing = core::mem::take(items);
                let mut children: [QuadTree; 4] = core::array::from_fn(|q| QuadTree::new(self.child_center(q), self.half / 2.0));
                for j in existing.into_iter().chain(core::iter::once(i)) {
                    let q = self.quadrant(positions[j]);
                    children[q].insert(j, positions, mass, depth + 1);
                }
                self.cell = Cell::Split(Box::new(children));
            }
            Cell::Split(children) => {
                let q = usize::from(p[0] >= self.center[0]) + 2 * usize::from(p[1] >= self.center[1]);
                children[q].insert(i, positions, mass, depth + 1);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn repulse(
        &self,
        i: usize,
        p: Point,
        m: f64,
        k_r: f64,
        positions: &[Point],
        mass: &dyn Fn(usize) -> f64,
        out: &mut Point,
    ) {
        match &self.cell {
            Cell::Empty => {}
            Cell::Leaf(items) => {
                for &j in items {
                    if j == i {
                        continue;
                    }
                    let dx = p[0] - positions[j][0];
                    let dy = p[1] - positions[j][1];
                    let d = libm::sqrt(dx * dx + dy * dy);
                    if d == 0.0 {
                        continue;
                    }
                    let f = k_r * m * mass(j) / d.max(MIN_DISTANCE);
                    add(out, dx / d * f, dy / d * f);
                }
            }
            Cell::Split(children) => {
                let dx = p[0] - self.mass_center[0];
                let dy = p[1] - self.mass_center[1];
                let d = libm::sqrt(dx * dx + dy * dy);
                let inside = (p[0] - self.center[0]).abs() <= self.half && (p[1] - self.center[1]).abs() <= self.half;
                if !inside && d > 0.0 && 2.0 * self.half / d < BARNES_HUT_THETA {
                    let f = k_r * m * self.mass / d.max(MIN_DISTANCE);
                    add(out, dx / d * f, dy / d * f);
                } else {
                    for c in children.iter() {
                        c.repulse(i, p, m, k_r, positions, mass, out);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
pub(crate) fn exact_repulsion_for_tests(positions: &[Point], graph: &LayoutGraph, params: &LayoutParams) -> Vec<Point> {
    let n = positions.len();
    let mut forces = vec![[0.0, 0.0]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dx = positions[i][0] - positions[j][0];
            let dy = positions[i][1] - positions[j][1];
            let d = libm::sqrt(dx * dx + dy * dy);
            let f = params.repulsion * graph.mass(i) * graph.mass(j) / d;
            add(&mut forces[i], dx / d * f, dy / d * f);
        }
    }
    for &(a, b, w) in &graph.edges {
        let dx = positions[a][0] - positions[b][0];
        let dy = positions[a][1] - positions[b][1];
        add(&mut forces[a], -dx * w, -dy * w);
        add(&mut forces[b], dx * w, dy * w);
    }
    for (i, f) in forces.iter_mut().enumerate() {
        let [x, y] = positions[i];
        let d = libm::sqrt(x * x + y * y);
        add(f, -x / d * params.gravity * graph.mass(i), -y / d * params.gravity * graph.mass(i));
    }
    forces
}
