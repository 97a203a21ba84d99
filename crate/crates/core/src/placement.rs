//! Brute-force stacking of item bounding boxes inside a cardboard box.
//!
//! Items already in the box (A) are fixed. Items about to be picked (B)
//! are placed before items that will come later (C). Every order,
//! orientation and candidate position is searched and the arrangement
//! with the lowest stack wins; only the B poses are returned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Item, ItemId};

/// Largest |A| + |B| + |C| the exhaustive search accepts.
pub const MAX_ITEMS: usize = 12;

const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rotation {
    #[serde(rename = "0")]
    Deg0,
    #[serde(rename = "90")]
    Deg90,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    /// Index into the item's `bbox_mm` that points up.
    pub up_axis: usize,
    pub rotation: Rotation,
    /// Length (x), width (y), height after orientation.
    pub dims: [f64; 3],
}

/// Clearly elongated items: longest side at least twice the shortest.
pub fn is_oblong(dims: [f64; 3]) -> bool {
    let max = dims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = dims.iter().cloned().fold(f64::INFINITY, f64::min);
    max >= 2.0 * min
}

fn orient(dims: [f64; 3], up_axis: usize, rotation: Rotation) -> Orientation {
    let mut horiz = (0..3).filter(|&i| i != up_axis).map(|i| dims[i]);
    let (a, b) = (horiz.next().unwrap(), horiz.next().unwrap());
    let (l, w) = match rotation {
        Rotation::Deg0 => (a, b),
        Rotation::Deg90 => (b, a),
    };
    Orientation {
        up_axis,
        rotation,
        dims: [l, w, dims[up_axis]],
    }
}

/// Allowed orientations of an item, deduplicated by resulting dimensions.
/// Oblong items always lie on their smallest side.
pub fn oblong_orientations(item: &Item) -> Vec<Orientation> {
    let d = item.bbox_mm;
    let up_axes: Vec<usize> = if is_oblong(d) {
        let min = (0..3).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        vec![min]
    } else {
        vec![0, 1, 2]
    };
    let mut out: Vec<Orientation> = Vec::new();
    for up in up_axes {
        for rot in [Rotation::Deg0, Rotation::Deg90] {
            let o = orient(d, up, rot);
            if !out.iter().any(|p| p.dims == o.dims) {
                out.push(o);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementPose {
    pub item_id: ItemId,
    /// Minimum corner of the oriented bounding box, box frame.
    pub position_mm: [f64; 3],
    pub rotation: Rotation,
    pub up_axis: usize,
    pub oriented_dims_mm: [f64; 3],
}

impl PlacementPose {
    pub fn top(&self) -> f64 {
        self.position_mm[2] + self.oriented_dims_mm[2]
    }

    /// Footprint center in the box frame.
    pub fn center_xy(&self) -> (f64, f64) {
        (
            self.position_mm[0] + self.oriented_dims_mm[0] / 2.0,
            self.position_mm[1] + self.oriented_dims_mm[1] / 2.0,
        )
    }

    fn overlaps_xy(&self, x: f64, y: f64, l: f64, w: f64) -> bool {
        let p = &self.position_mm;
        let d = &self.oriented_dims_mm;
        p[0] < x + l - EPS && x < p[0] + d[0] - EPS && p[1] < y + w - EPS && y < p[1] + d[1] - EPS
    }

    /// Interior intersection on all three axes.
    pub fn overlaps(&self, other: &PlacementPose) -> bool {
        (0..3).all(|k| {
            self.position_mm[k] < other.position_mm[k] + other.oriented_dims_mm[k] - EPS
                && other.position_mm[k] < self.position_mm[k] + self.oriented_dims_mm[k] - EPS
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlacementProblem {
    /// Inner length, width, height of the box.
    pub box_dims_mm: [f64; 3],
    pub placed_a: Vec<PlacementPose>,
    pub pending_b: Vec<Item>,
    pub future_c: Vec<Item>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlacementPlan {
    /// One pose per B item, in input order.
    pub poses: Vec<PlacementPose>,
    /// Highest top face over A, B and C in the best arrangement.
    pub total_height_mm: f64,
}

struct Search<'a> {
    box_dims: [f64; 3],
    b: Vec<(&'a Item, Vec<Orientation>)>,
    c: Vec<(&'a Item, Vec<Orientation>)>,
    placed: Vec<PlacementPose>,
    best: Option<(f64, f64, Vec<PlacementPose>)>,
}

fn fits(o: &Orientation, box_dims: [f64; 3]) -> bool {
    o.dims[0] <= box_dims[0] + EPS && o.dims[1] <= box_dims[1] + EPS
}

fn candidates(extent: f64, size: f64, placed: &[(f64, f64)]) -> Vec<f64> {
    let max = extent - size;
    let mut v = vec![0.0, max];
    for &(p, d) in placed {
        v.extend([p, p + d, p - size, p + d - size]);
    }
    v.retain(|&x| x >= -EPS && x <= max + EPS);
    for x in &mut v {
        *x = x.clamp(0.0, max.max(0.0));
    }
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < EPS);
    v
}

impl<'a> Search<'a> {
    fn drop_height(&self, x: f64, y: f64, l: f64, w: f64) -> f64 {
        self.placed
            .iter()
            .filter(|p| p.overlaps_xy(x, y, l, w))
            .map(PlacementPose::top)
            .fold(0.0, f64::max)
    }

    fn better(&self, h: f64, dist: f64) -> bool {
        match &self.best {
            None => true,
            Some((bh, bd, _)) => h < bh - EPS || (h <= bh + EPS && dist < bd - EPS),
        }
    }

    fn run(&mut self, used_b: u32, used_c: u32, height: f64, dist: f64) {
        if !self.better(height, dist) {
            return;
        }
        let b_done = used_b.count_ones() as usize == self.b.len();
        if b_done && used_c.count_ones() as usize == self.c.len() {
            let b_poses = self.placed[self.placed.len() - self.b.len() - self.c.len()..]
                [..self.b.len()]
                .to_vec();
            self.best = Some((height, dist, b_poses));
            return;
        }
        let (group, used, from_b) = if b_done {
            (&self.c, used_c, false)
        } else {
            (&self.b, used_b, true)
        };
        let group: Vec<(&'a Item, Vec<Orientation>)> = group.clone();
        for (i, (item, orients)) in group.iter().enumerate() {
            if used >> i & 1 == 1 {
                continue;
            }
            for o in orients {
                let xs: Vec<(f64, f64)> = self
                    .placed
                    .iter()
                    .map(|p| (p.position_mm[0], p.oriented_dims_mm[0]))
                    .collect();
                let ys: Vec<(f64, f64)> = self
                    .placed
                    .iter()
                    .map(|p| (p.position_mm[1], p.oriented_dims_mm[1]))
                    .collect();
                for &x in &candidates(self.box_dims[0], o.dims[0], &xs) {
                    for &y in &candidates(self.box_dims[1], o.dims[1], &ys) {
                        let z = self.drop_height(x, y, o.dims[0], o.dims[1]);
                        let h = height.max(z + o.dims[2]);
                        let d = if from_b {
                            dist + (x * x + y * y + z * z).sqrt()
                        } else {
                            dist
                        };
                        if !self.better(h, d) {
                            continue;
                        }
                        self.placed.push(PlacementPose {
                            item_id: item.id.clone(),
                            position_mm: [x, y, z],
                            rotation: o.rotation,
                            up_axis: o.up_axis,
                            oriented_dims_mm: o.dims,
                        });
                        if from_b {
                            self.run(used_b | 1 << i, used_c, h, d);
                        } else {
                            self.run(used_b, used_c | 1 << i, h, d);
                        }
                        self.placed.pop();
                    }
                }
            }
        }
    }
}

pub fn plan_placement(p: &PlacementProblem) -> Result<PlacementPlan> {
    let n = p.placed_a.len() + p.pending_b.len() + p.future_c.len();
    if n > MAX_ITEMS {
        return Err(Error::Argument(format!(
            "placement search is capped at {MAX_ITEMS} items, got {n}"
        )));
    }
    if p.box_dims_mm.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Argument("box dimensions must be positive".into()));
    }
    for (i, a) in p.placed_a.iter().enumerate() {
        let inside = (0..2).all(|k| {
            a.position_mm[k] >= -EPS
                && a.position_mm[k] + a.oriented_dims_mm[k] <= p.box_dims_mm[k] + EPS
        });
        if !inside || p.placed_a[..i].iter().any(|o| o.overlaps(a)) {
            return Err(Error::Argument(format!(
                "fixed item {} is outside the box or overlaps another fixed item",
                a.item_id
            )));
        }
    }
    let mut b = Vec::new();
    for item in &p.pending_b {
        let orients: Vec<Orientation> = oblong_orientations(item)
            .into_iter()
            .filter(|o| fits(o, p.box_dims_mm))
            .collect();
        if orients.is_empty() {
            return Err(Error::InfeasibleItem(item.id.clone()));
        }
        b.push((item, orients));
    }
    // later items that can never fit do not constrain the plan
    let c: Vec<_> = p
        .future_c
        .iter()
        .map(|item| {
            let o: Vec<Orientation> = oblong_orientations(item)
                .into_iter()
                .filter(|o| fits(o, p.box_dims_mm))
                .collect();
            (item, o)
        })
        .filter(|(_, o)| !o.is_empty())
        .collect();

    let base = p
        .placed_a
        .iter()
        .map(PlacementPose::top)
        .fold(0.0, f64::max);
    let mut search = Search {
        box_dims: p.box_dims_mm,
        b,
        c,
        placed: p.placed_a.clone(),
        best: None,
    };
    search.run(0, 0, base, 0.0);
    let (height, _, placed_b) = search.best.expect("every item fits the empty footprint");
    let poses = p
        .pending_b
        .iter()
        .map(|item| {
            placed_b
                .iter()
                .find(|pp| pp.item_id == item.id)
                .cloned()
                .expect("every B item is placed")
        })
        .collect();
    Ok(PlacementPlan {
        poses,
        total_height_mm: height,
    })
}
