use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{hashed_angle, LayoutError, Point};
use crate::entity::EntityId;

/// Axis-aligned label box centred on its node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelBox {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelParams {
    /// Box width per character of the display name.
    pub char_width: f64,
    pub height: f64,
    pub padding: f64,
    pub max_passes: u32,
}

impl Default for LabelParams {
    fn default() -> Self {
        Self {
            char_width: 0.6,
            height: 1.2,
            padding: 0.4,
            max_passes: 200,
        }
    }
}

impl LabelParams {
    pub fn box_for(&self, label: &str) -> LabelBox {
        LabelBox {
            width: self.char_width * label.chars().count() as f64 + self.padding,
            height: self.height + self.padding,
        }
    }
}

/// Strict overlap: boxes that only touch do not overlap.
pub fn overlapping(a: Point, ab: LabelBox, b: Point, bb: LabelBox) -> bool {
    (a[0] - b[0]).abs() < (ab.width + bb.width) / 2.0 && (a[1] - b[1]).abs() < (ab.height + bb.height) / 2.0
}

fn check_boxes(boxes: &[LabelBox]) -> Result<(), LayoutError> {
    for b in boxes {
        for (name, v) in [("label width", b.width), ("label height", b.height)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(LayoutError::InvalidParam { name, value: v });
            }
        }
    }
    Ok(())
}

fn count(positions: &[Point], boxes: &[LabelBox]) -> usize {
    let mut n = 0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            n += usize::from(overlapping(positions[i], boxes[i], positions[j], boxes[j]));
        }
    }
    n
}

/// Ids with their positions and boxes, in id order.
type Gathered = (Vec<EntityId>, Vec<Point>, Vec<LabelBox>);

fn gather(positions: &BTreeMap<EntityId, Point>, boxes: &BTreeMap<EntityId, LabelBox>) -> Result<Gathered, LayoutError> {
    let mut ids = Vec::new();
    let mut ps = Vec::new();
    let mut bs = Vec::new();
    for (id, p) in positions {
        let b = boxes.get(id).ok_or_else(|| LayoutError::MissingBox(id.clone()))?;
        ids.push(id.clone());
        ps.push(*p);
        bs.push(*b);
    }
    check_boxes(&bs)?;
    Ok((ids, ps, bs))
}

pub fn count_overlaps(
    positions: &BTreeMap<EntityId, Point>,
    boxes: &BTreeMap<EntityId, LabelBox>,
) -> Result<usize, LayoutError> {
    let (_, ps, bs) = gather(positions, boxes)?;
    Ok(count(&ps, &bs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelAdjustment {
    pub positions: BTreeMap<EntityId, Point>,
    pub initial_overlaps: usize,
    /// Overlap count after each completed pass.
    pub overlaps_per_pass: Vec<usize>,
    pub remaining_overlaps: usize,
}

/// Push overlapping label boxes apart along their centre line, visiting pairs
/// in id order and applying moves immediately. Stops when no pair overlaps or
/// after `max_passes`; whatever still overlaps is reported.
pub fn resolve_label_overlaps(
    positions: &BTreeMap<EntityId, Point>,
    boxes: &BTreeMap<EntityId, LabelBox>,
    max_passes: u32,
    seed: u64,
) -> Result<LabelAdjustment, LayoutError> {
    let (ids, mut ps, bs) = gather(positions, boxes)?;
    let initial = count(&ps, &bs);
    let mut per_pass = Vec::new();
    let mut remaining = initial;
    let mut pass = 0;
    while remaining > 0 && pass < max_passes {
        for i in 0..ps.len() {
            for j in i + 1..ps.len() {
                if overlapping(ps[i], bs[i], ps[j], bs[j]) {
                    push_apart(&mut ps, &bs, i, j, seed, pass);
                }
            }
        }
        remaining = count(&ps, &bs);
        per_pass.push(remaining);
        pass += 1;
    }
    Ok(LabelAdjustment {
        positions: ids.into_iter().zip(ps).collect(),
        initial_overlaps: initial,
        overlaps_per_pass: per_pass,
        remaining_overlaps: remaining,
    })
}

fn push_apart(ps: &mut [Point], bs: &[LabelBox], i: usize, j: usize, seed: u64, pass: u32) {
    let (dx, dy) = (ps[j][0] - ps[i][0], ps[j][1] - ps[i][1]);
    let d = libm::sqrt(dx * dx + dy * dy);
    let (ux, uy) = if d > 0.0 {
        (dx / d, dy / d)
    } else {
        let a = hashed_angle(seed, &[u64::from(pass), i as u64, j as u64]);
        (libm::cos(a), libm::sin(a))
    };
    let half_w = (bs[i].width + bs[j].width) / 2.0;
    let half_h = (bs[i].height + bs[j].height) / 2.0;
    // Separation along u needed to clear on either axis, measured from the current offset.
    let along = |extent: f64, offset: f64, u: f64| {
        if u.abs() < 1e-15 {
            f64::INFINITY
        } else {
            (extent - offset.abs()) / u.abs()
        }
    };
    let need = along(half_w, dx, ux).min(along(half_h, dy, uy));
    let margin = 1e-9 * (half_w + half_h);
    let s = (need + margin) / 2.0;
    ps[i] = [ps[i][0] - ux * s, ps[i][1] - uy * s];
    ps[j] = [ps[j][0] + ux * s, ps[j][1] + uy * s];
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(points: &[(f64, f64)], w: f64, h: f64) -> (BTreeMap<EntityId, Point>, BTreeMap<EntityId, LabelBox>) {
        let mut ps = BTreeMap::new();
        let mut bs = BTreeMap::new();
        for (k, &(x, y)) in points.iter().enumerate() {
            let id = EntityId::new(alloc::format!("p{k}"));
            ps.insert(id.clone(), [x, y]);
            bs.insert(id, LabelBox { width: w, height: h });
        }
        (ps, bs)
    }

    #[test]
    fn separates_overlapping_chain_of_three() {
        let (ps, bs) = setup(&[(0.0, 0.0), (0.8, 0.0), (1.6, 0.0)], 1.0, 0.5);
        assert_eq!(count_overlaps(&ps, &bs).unwrap(), 2);
        let r = resolve_label_overlaps(&ps, &bs, 100, 0).unwrap();
        assert_eq!(r.remaining_overlaps, 0);
    }

    #[test]
    fn identical_centres_are_separated() {
        let (ps, bs) = setup(&[(1.0, 1.0), (1.0, 1.0)], 1.0, 1.0);
        let r = resolve_label_overlaps(&ps, &bs, 10, 4).unwrap();
        assert_eq!(r.remaining_overlaps, 0);
    }

    #[test]
    fn touching_boxes_do_not_overlap() {
        let b = LabelBox { width: 1.0, height: 1.0 };
        assert!(!overlapping([0.0, 0.0], b, [1.0, 0.0], b));
        assert!(overlapping([0.0, 0.0], b, [0.999, 0.5], b));
    }

    #[test]
    fn missing_box_is_an_error() {
        let (ps, mut bs) = setup(&[(0.0, 0.0)], 1.0, 1.0);
        bs.clear();
        assert!(matches!(resolve_label_overlaps(&ps, &bs, 1, 0), Err(LayoutError::MissingBox(_))));
    }
}
