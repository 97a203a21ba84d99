//! Synthetic container contents and their rendering into label and
//! height maps.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Polygon, MIN_AREA_MM2};
use crate::model::{Container, ContainerKind, Detection, Item, ItemId, SceneMaps};

/// An axis-aligned item resting in a container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneItem {
    pub item_id: ItemId,
    /// Footprint minimum corner, workspace frame.
    pub min_mm: Point2,
    pub footprint_mm: [f64; 2],
    pub base_mm: f64,
    pub top_mm: f64,
}

impl SceneItem {
    pub fn max_mm(&self) -> Point2 {
        self.min_mm + Point2::new(self.footprint_mm[0], self.footprint_mm[1])
    }

    pub fn center(&self) -> Point2 {
        self.min_mm + Point2::new(self.footprint_mm[0] / 2.0, self.footprint_mm[1] / 2.0)
    }

    pub fn contains(&self, p: Point2) -> bool {
        let hi = self.max_mm();
        p.x >= self.min_mm.x && p.x < hi.x && p.y >= self.min_mm.y && p.y < hi.y
    }

    fn overlaps(&self, other: &SceneItem) -> bool {
        let (a, b) = (self.max_mm(), other.max_mm());
        self.min_mm.x < b.x && other.min_mm.x < a.x && self.min_mm.y < b.y && other.min_mm.y < a.y
    }
}

/// Contents of one container, bottom of the stack first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainerScene {
    pub kind: ContainerKind,
    pub footprint_min: Point2,
    pub footprint_max: Point2,
    pub items: Vec<SceneItem>,
}

impl ContainerScene {
    pub fn empty(container: &Container) -> Self {
        Self {
            kind: container.kind,
            footprint_min: container.footprint_min(),
            footprint_max: container.footprint_max(),
            items: Vec::new(),
        }
    }

    pub fn contains(&self, id: &ItemId) -> bool {
        self.items.iter().any(|i| &i.item_id == id)
    }

    pub fn get(&self, id: &ItemId) -> Option<&SceneItem> {
        self.items.iter().find(|i| &i.item_id == id)
    }

    pub fn remove(&mut self, id: &ItemId) -> Option<SceneItem> {
        let i = self.items.iter().position(|s| &s.item_id == id)?;
        Some(self.items.remove(i))
    }

    /// Drops `item` at a uniform in-bounds position on top of whatever
    /// it overlaps.
    pub fn drop_item<R: Rng + ?Sized>(&mut self, item: &Item, rng: &mut R) -> Result<()> {
        let [l, w, h] = item.bbox_mm;
        let span = self.footprint_max - self.footprint_min;
        if l > span.x || w > span.y {
            return Err(Error::validation(
                "Item.bbox_mm",
                format!(
                    "footprint {l} x {w} of {} exceeds container {} ({} x {})",
                    item.id, self.kind, span.x, span.y
                ),
            ));
        }
        let x = self.footprint_min.x + rng.random::<f64>() * (span.x - l);
        let y = self.footprint_min.y + rng.random::<f64>() * (span.y - w);
        let mut placed = SceneItem {
            item_id: item.id.clone(),
            min_mm: Point2::new(x, y),
            footprint_mm: [l, w],
            base_mm: 0.0,
            top_mm: h,
        };
        placed.base_mm = self
            .items
            .iter()
            .filter(|s| s.overlaps(&placed))
            .map(|s| s.top_mm)
            .fold(0.0, f64::max);
        placed.top_mm = placed.base_mm + h;
        self.items.push(placed);
        Ok(())
    }

    /// Stacks `item` centered on top of whatever it overlaps, even when
    /// its footprint overhangs the walls.
    pub fn stack_centered(&mut self, item: &Item) {
        let [l, w, h] = item.bbox_mm;
        let mid = (self.footprint_min + self.footprint_max) * 0.5;
        let mut placed = SceneItem {
            item_id: item.id.clone(),
            min_mm: mid - Point2::new(l / 2.0, w / 2.0),
            footprint_mm: [l, w],
            base_mm: 0.0,
            top_mm: h,
        };
        placed.base_mm = self
            .items
            .iter()
            .filter(|s| s.overlaps(&placed))
            .map(|s| s.top_mm)
            .fold(0.0, f64::max);
        placed.top_mm = placed.base_mm + h;
        self.items.push(placed);
    }

    /// Sample points on an item's footprint: center and four inner points.
    pub fn footprint_points(&self, id: &ItemId) -> Vec<Point2> {
        let Some(s) = self.get(id) else {
            return Vec::new();
        };
        let (lo, [l, w]) = (s.min_mm, s.footprint_mm);
        [
            (0.5, 0.5),
            (0.25, 0.25),
            (0.75, 0.25),
            (0.25, 0.75),
            (0.75, 0.75),
        ]
        .iter()
        .map(|&(fx, fy)| lo + Point2::new(fx * l, fy * w))
        .collect()
    }
}

/// Item states of every container in an episode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimScene {
    pub containers: BTreeMap<ContainerKind, ContainerScene>,
}

impl SimScene {
    pub fn get(&self, kind: ContainerKind) -> Option<&ContainerScene> {
        self.containers.get(&kind)
    }

    pub fn get_mut(&mut self, kind: ContainerKind) -> Option<&mut ContainerScene> {
        self.containers.get_mut(&kind)
    }

    pub fn locate(&self, id: &ItemId) -> Option<ContainerKind> {
        self.containers
            .values()
            .find(|c| c.contains(id))
            .map(|c| c.kind)
    }

    /// Items per container in stack order.
    pub fn inventory(&self) -> BTreeMap<ContainerKind, Vec<ItemId>> {
        self.containers
            .iter()
            .map(|(k, c)| (*k, c.items.iter().map(|i| i.item_id.clone()).collect()))
            .collect()
    }
}

/// Uniform positions with fixed orientation; later items stack on top.
pub fn sample_scene<R: Rng + ?Sized>(
    items: &[Item],
    container: &Container,
    rng: &mut R,
) -> Result<SimScene> {
    let mut c = ContainerScene::empty(container);
    for item in items {
        c.drop_item(item, rng)?;
    }
    let mut scene = SimScene::default();
    scene.containers.insert(container.kind, c);
    Ok(scene)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub maps: SceneMaps,
    pub detections: Vec<Detection>,
}

/// Half-open pixel range whose centers fall in `[a, b)`.
fn pixel_range(a: f64, b: f64, origin: f64, res: f64, n: usize) -> (usize, usize) {
    let lo = ((a - origin) / res - 0.5).ceil().max(0.0) as usize;
    let hi = ((b - origin) / res - 0.5).ceil().max(0.0) as usize;
    (lo.min(n), hi.min(n))
}

/// Rasterizes a container top-down. Visible pixels carry the label and
/// top height of the highest item; detection confidence is the visible
/// fraction of the footprint.
pub fn render(scene: &ContainerScene, resolution_mm_per_px: f64) -> Rendered {
    let res = resolution_mm_per_px;
    let span = scene.footprint_max - scene.footprint_min;
    let (w, h) = (
        (span.x / res).ceil() as usize,
        (span.y / res).ceil() as usize,
    );
    let mut maps = SceneMaps::empty(scene.footprint_min, res, w.max(1), h.max(1));
    let o = scene.footprint_min;
    let mut footprint_px = Vec::with_capacity(scene.items.len());
    let mut ranges = Vec::with_capacity(scene.items.len());
    for item in &scene.items {
        let hi = item.max_mm();
        let cols = pixel_range(item.min_mm.x, hi.x, o.x, res, maps.width_px);
        let rows = pixel_range(item.min_mm.y, hi.y, o.y, res, maps.height_px);
        for r in rows.0..rows.1 {
            for c in cols.0..cols.1 {
                maps.set(c, r, Some(item.item_id.clone()), item.top_mm);
            }
        }
        footprint_px.push((cols.1 - cols.0) * (rows.1 - rows.0));
        ranges.push((cols, rows));
    }
    let mut detections = Vec::new();
    for (i, item) in scene.items.iter().enumerate() {
        let ((c0, c1), (r0, r1)) = ranges[i];
        let mut visible = 0usize;
        for r in r0..r1 {
            for c in c0..c1 {
                if maps.label_at(c, r) == Some(&item.item_id) {
                    visible += 1;
                }
            }
        }
        if visible == 0 || footprint_px[i] == 0 {
            continue;
        }
        let inside = |c: i64, r: i64| {
            c >= c0 as i64
                && c < c1 as i64
                && r >= r0 as i64
                && r < r1 as i64
                && maps.label_at(c as usize, r as usize) == Some(&item.item_id)
        };
        let Some(contour) = region_contour(inside, (c0, c1), (r0, r1), o, res) else {
            log::debug!("no usable contour for {}", item.item_id);
            continue;
        };
        detections.push(Detection {
            item_id: item.item_id.clone(),
            contour,
            confidence: visible as f64 / footprint_px[i] as f64,
            fail_count: 0,
        });
    }
    Rendered { maps, detections }
}

type Corner = (i64, i64);

/// Outer boundary of the largest region, through the centers of its
/// boundary pixels. Falls back to the pixel-edge outline when the region
/// is too thin for that.
fn region_contour(
    inside: impl Fn(i64, i64) -> bool,
    cols: (usize, usize),
    rows: (usize, usize),
    origin: Point2,
    res: f64,
) -> Option<Polygon> {
    let mut edges: BTreeMap<Corner, Vec<Corner>> = BTreeMap::new();
    for r in rows.0 as i64..rows.1 as i64 {
        for c in cols.0 as i64..cols.1 as i64 {
            if !inside(c, r) {
                continue;
            }
            // interior on the left of every edge
            if !inside(c, r - 1) {
                edges.entry((c, r)).or_default().push((c + 1, r));
            }
            if !inside(c + 1, r) {
                edges.entry((c + 1, r)).or_default().push((c + 1, r + 1));
            }
            if !inside(c, r + 1) {
                edges.entry((c + 1, r + 1)).or_default().push((c, r + 1));
            }
            if !inside(c - 1, r) {
                edges.entry((c, r + 1)).or_default().push((c, r));
            }
        }
    }
    let mut best: Option<(i64, Vec<Corner>)> = None;
    while let Some((&start, _)) = edges.iter().next() {
        let ring = trace_loop(&mut edges, start);
        let ring = drop_collinear(&ring);
        if ring.len() < 4 {
            continue;
        }
        let area2 = shoelace2(&ring);
        if area2 > 0 && best.as_ref().is_none_or(|(a, _)| area2 > *a) {
            best = Some((area2, ring));
        }
    }
    let (_, ring) = best?;
    let to_world = |x: f64, y: f64| origin + Point2::new(x * res, y * res);
    let n = ring.len();
    let inset: Vec<Point2> = (0..n)
        .map(|i| {
            let (p, v, q) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            let d_in = ((v.0 - p.0).signum(), (v.1 - p.1).signum());
            let d_out = ((q.0 - v.0).signum(), (q.1 - v.1).signum());
            let nx = (-d_in.1 - d_out.1) as f64 * 0.5;
            let ny = (d_in.0 + d_out.0) as f64 * 0.5;
            to_world(v.0 as f64 + nx, v.1 as f64 + ny)
        })
        .collect();
    if let Ok(p) = Polygon::new(inset) {
        if p.is_simple()
            && crate::geometry::area_and_centroid(&p).is_ok_and(|(a, _)| a >= MIN_AREA_MM2)
        {
            return Some(p);
        }
    }
    Polygon::new(
        ring.iter()
            .map(|&(x, y)| to_world(x as f64, y as f64))
            .collect(),
    )
    .ok()
}

fn trace_loop(edges: &mut BTreeMap<Corner, Vec<Corner>>, start: Corner) -> Vec<Corner> {
    let mut ring = vec![start];
    let mut cur = start;
    let mut dir: Option<Corner> = None;
    while let Some(outs) = edges.get_mut(&cur) {
        let pick = match dir {
            Some((dx, dy)) if outs.len() > 1 => {
                // hug the interior: left, straight, right
                let prefs = [(-dy, dx), (dx, dy), (dy, -dx)];
                prefs
                    .iter()
                    .find_map(|&(px, py)| {
                        outs.iter()
                            .position(|&(x, y)| (x - cur.0, y - cur.1) == (px, py))
                    })
                    .unwrap_or(0)
            }
            _ => 0,
        };
        let next = outs.remove(pick);
        if outs.is_empty() {
            edges.remove(&cur);
        }
        dir = Some((next.0 - cur.0, next.1 - cur.1));
        cur = next;
        if cur == start {
            break;
        }
        ring.push(cur);
    }
    ring
}

fn drop_collinear(ring: &[Corner]) -> Vec<Corner> {
    let n = ring.len();
    (0..n)
        .filter(|&i| {
            let (p, v, q) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            (v.0 - p.0) * (q.1 - v.1) - (v.1 - p.1) * (q.0 - v.0) != 0
        })
        .map(|i| ring[i])
        .collect()
}

fn shoelace2(ring: &[Corner]) -> i64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum()
}
