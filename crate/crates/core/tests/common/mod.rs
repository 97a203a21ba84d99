//! Independent oracles, generators and log replay shared by the
//! integration and acceptance tests. Nothing here calls the routine it
//! checks.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use binpick::clutter::ClutterGraph;
use binpick::geometry::{Point2, Polygon};
use binpick::model::{load_scenario, Arm, Item, Scenario};
use binpick::placement::{PlacementPose, PlacementProblem, Rotation};
use binpick::sim::{ActionKind, EpisodeLog, SimConfig};

pub fn bundled(file: &str) -> Scenario {
    let path = format!("{}/data/{file}", env!("CARGO_MANIFEST_DIR"));
    load_scenario(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn pick_scenario() -> Scenario {
    bundled("arc_final.json")
}

pub fn stow_scenario() -> Scenario {
    bundled("arc_final_stow.json")
}

pub fn pt(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

// ---------------------------------------------------------------- polygons

/// Star-shaped polygon around `center`: sorted distinct angles, radii in
/// `[0.25, 1] * radius`. Always simple.
pub fn star_polygon<R: Rng>(rng: &mut R, n: usize, center: Point2, radius: f64) -> Polygon {
    let mut angles: Vec<f64> = (0..n)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    while angles.len() < 3 {
        angles = vec![0.0, 2.1, 4.2];
    }
    let pts = angles
        .iter()
        .map(|&a| {
            let r = radius * rng.random_range(0.25..=1.0);
            pt(center.x + r * a.cos(), center.y + r * a.sin())
        })
        .collect();
    Polygon::new(pts).unwrap()
}

fn seg_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let (abx, aby) = (b.x - a.x, b.y - a.y);
    let len2 = abx * abx + aby * aby;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0)
    };
    let (dx, dy) = (a.x + t * abx - p.x, a.y + t * aby - p.y);
    (dx * dx + dy * dy).sqrt()
}

/// Even-odd crossing test.
pub fn inside(p: Point2, v: &[Point2]) -> bool {
    let mut c = false;
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y) {
            c = !c;
        }
    }
    c
}

pub fn signed_distance(p: Point2, v: &[Point2]) -> f64 {
    let n = v.len();
    let d = (0..n)
        .map(|i| seg_dist(p, v[i], v[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min);
    if inside(p, v) {
        d
    } else {
        -d
    }
}

/// Largest signed distance over a square grid of spacing `step` covering
/// the bounding box.
pub fn grid_pole(poly: &Polygon, step: f64) -> f64 {
    let v = poly.vertices();
    let (lo, hi) = bounds(v);
    let mut best = f64::NEG_INFINITY;
    let mut y = lo.y;
    while y <= hi.y {
        let mut x = lo.x;
        while x <= hi.x {
            best = best.max(signed_distance(pt(x, y), v));
            x += step;
        }
        y += step;
    }
    best
}

pub fn bounds(v: &[Point2]) -> (Point2, Point2) {
    let mut lo = pt(f64::INFINITY, f64::INFINITY);
    let mut hi = pt(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in v {
        lo = pt(lo.x.min(p.x), lo.y.min(p.y));
        hi = pt(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

/// Shoelace centroid.
pub fn centroid(v: &[Point2]) -> (f64, Point2) {
    let n = v.len();
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (p, q) = (v[i], v[(i + 1) % n]);
        let c = p.x * q.y - q.x * p.y;
        a2 += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    (a2 / 2.0, pt(cx / (3.0 * a2), cy / (3.0 * a2)))
}

// ------------------------------------------------------------------- graphs

pub fn random_digraph<R: Rng>(rng: &mut R, vertices: usize, max_edges: usize) -> ClutterGraph {
    let mut g = ClutterGraph::new();
    let ids: Vec<String> = (0..vertices).map(|i| format!("v{i}")).collect();
    for id in &ids {
        g.add_vertex(id.as_str().into(), id.clone(), 1.0);
    }
    let mut pairs: Vec<(usize, usize)> = (0..vertices)
        .flat_map(|a| (0..vertices).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let m = rng.random_range(0..=max_edges.min(pairs.len()));
    for _ in 0..m {
        let k = rng.random_range(0..pairs.len());
        let (a, b) = pairs.swap_remove(k);
        g.add_evidence(
            &ids[a].as_str().into(),
            &ids[b].as_str().into(),
            rng.random_range(1..=20),
        );
    }
    g
}

fn acyclic_by_dfs(n: usize, edges: &[(usize, usize)]) -> bool {
    // 0 unvisited, 1 on stack, 2 done
    fn visit(v: usize, adj: &[Vec<usize>], state: &mut [u8]) -> bool {
        state[v] = 1;
        for &w in &adj[v] {
            if state[w] == 1 || (state[w] == 0 && !visit(w, adj, state)) {
                return false;
            }
        }
        state[v] = 2;
        true
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    let mut state = vec![0u8; n];
    (0..n).all(|v| state[v] != 0 || visit(v, &adj, &mut state))
}

pub fn is_acyclic(g: &ClutterGraph) -> bool {
    let idx: BTreeMap<_, _> = g.vertices.keys().enumerate().map(|(i, k)| (k, i)).collect();
    let edges: Vec<_> = g.edges.keys().map(|(a, b)| (idx[a], idx[b])).collect();
    acyclic_by_dfs(idx.len(), &edges)
}

/// Minimum evidence over every edge subset whose removal leaves a DAG.
pub fn exhaustive_mfas(g: &ClutterGraph) -> u64 {
    let idx: BTreeMap<_, _> = g.vertices.keys().enumerate().map(|(i, k)| (k, i)).collect();
    let edges: Vec<(usize, usize, u32)> = g
        .edges
        .iter()
        .map(|((a, b), &w)| (idx[a], idx[b], w))
        .collect();
    assert!(edges.len() <= 16, "oracle is exponential");
    let mut best = u64::MAX;
    for mask in 0u32..1 << edges.len() {
        let mut removed = 0u64;
        let mut kept = Vec::new();
        for (i, &(a, b, w)) in edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                removed += w as u64;
            } else {
                kept.push((a, b));
            }
        }
        if removed < best && acyclic_by_dfs(idx.len(), &kept) {
            best = removed;
        }
    }
    best
}

// ---------------------------------------------------------------- placement

/// Small instance on a 10 mm lattice so the grid oracle is position
/// complete.
pub fn instance(seed: u64, max_b: usize, max_c: usize) -> (PlacementProblem, Vec<GridBox>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = |rng: &mut ChaCha8Rng, lo: u32, hi: u32| 10.0 * rng.random_range(lo..=hi) as f64;
    let box_dims = [dim(&mut rng, 4, 6), dim(&mut rng, 3, 5), 200.0];
    let mut a = Vec::new();
    if rng.random_bool(0.5) {
        let d = [
            dim(&mut rng, 1, 3),
            dim(&mut rng, 1, 3),
            dim(&mut rng, 1, 4),
        ];
        let x = 10.0 * rng.random_range(0..=((box_dims[0] - d[0]) / 10.0) as u32) as f64;
        let y = 10.0 * rng.random_range(0..=((box_dims[1] - d[1]) / 10.0) as u32) as f64;
        a.push(PlacementPose {
            item_id: "fixed".into(),
            position_mm: [x, y, 0.0],
            rotation: Rotation::Deg0,
            up_axis: 2,
            oriented_dims_mm: d,
        });
    }
    let rand_item = |name: String, rng: &mut ChaCha8Rng| {
        item(&name, [dim(rng, 1, 4), dim(rng, 1, 3), dim(rng, 1, 3)])
    };
    let nb = rng.random_range(1..=max_b);
    let nc = rng.random_range(0..=max_c);
    let b = (0..nb)
        .map(|i| rand_item(format!("b{i}"), &mut rng))
        .collect();
    let c = (0..nc)
        .map(|i| rand_item(format!("c{i}"), &mut rng))
        .collect();
    let grid = a.iter().map(GridBox::from).collect();
    (
        PlacementProblem {
            box_dims_mm: box_dims,
            placed_a: a,
            pending_b: b,
            future_c: c,
        },
        grid,
    )
}

pub fn item(id: &str, dims: [f64; 3]) -> Item {
    Item {
        id: id.into(),
        class_name: id.into(),
        mass_g: 100.0,
        bbox_mm: dims,
        suction_probability: 0.5,
        is_target: true,
    }
}

/// Every (l, w, h) an item may take: any face down, both yaws; an item
/// whose longest side is at least twice its shortest must lie on its
/// smallest side.
pub fn allowed_dims(d: [f64; 3]) -> Vec<[f64; 3]> {
    let max = d.iter().cloned().fold(f64::MIN, f64::max);
    let min = d.iter().cloned().fold(f64::MAX, f64::min);
    let oblong = max >= 2.0 * min;
    let mut out = Vec::new();
    for (a, b, c) in [
        (0, 1, 2),
        (1, 0, 2),
        (0, 2, 1),
        (2, 0, 1),
        (1, 2, 0),
        (2, 1, 0),
    ] {
        if oblong && d[c] != min {
            continue;
        }
        let o = [d[a], d[b], d[c]];
        if !out.contains(&o) {
            out.push(o);
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct GridBox {
    pub pos: [f64; 3],
    pub dims: [f64; 3],
}

impl GridBox {
    fn overlaps_xy(&self, o: &GridBox) -> bool {
        (0..2).all(|k| self.pos[k] < o.pos[k] + o.dims[k] && o.pos[k] < self.pos[k] + self.dims[k])
    }

    pub fn overlaps(&self, o: &GridBox) -> bool {
        (0..3).all(|k| self.pos[k] < o.pos[k] + o.dims[k] && o.pos[k] < self.pos[k] + self.dims[k])
    }

    pub fn top(&self) -> f64 {
        self.pos[2] + self.dims[2]
    }
}

impl From<&PlacementPose> for GridBox {
    fn from(p: &PlacementPose) -> Self {
        GridBox {
            pos: p.position_mm,
            dims: p.oriented_dims_mm,
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Lowest achievable stack when B items go in (any order) before C items
/// (any order), each dropped straight down at a `step`-grid position in
/// any allowed orientation. Items that can never fit the footprint are
/// ignored in C.
pub fn grid_placement_oracle(
    box_dims: [f64; 3],
    a: &[GridBox],
    b: &[[f64; 3]],
    c: &[[f64; 3]],
    step: f64,
) -> f64 {
    let fits = |o: &[f64; 3]| o[0] <= box_dims[0] && o[1] <= box_dims[1];
    let c: Vec<[f64; 3]> = c
        .iter()
        .copied()
        .filter(|d| allowed_dims(*d).iter().any(fits))
        .collect();
    let mut best = f64::INFINITY;
    let base = a.iter().map(GridBox::top).fold(0.0, f64::max);
    for pb in permutations(b.len()) {
        for pc in permutations(c.len()) {
            let seq: Vec<[f64; 3]> = pb
                .iter()
                .map(|&i| b[i])
                .chain(pc.iter().map(|&i| c[i]))
                .collect();
            let mut placed = a.to_vec();
            drop_all(box_dims, &seq, &mut placed, base, step, &mut best);
        }
    }
    best
}

fn drop_all(
    box_dims: [f64; 3],
    seq: &[[f64; 3]],
    placed: &mut Vec<GridBox>,
    height: f64,
    step: f64,
    best: &mut f64,
) {
    if height >= *best {
        return;
    }
    let Some((first, rest)) = seq.split_first() else {
        *best = height;
        return;
    };
    for o in allowed_dims(*first) {
        if o[0] > box_dims[0] || o[1] > box_dims[1] {
            continue;
        }
        let mut x = 0.0;
        while x + o[0] <= box_dims[0] {
            let mut y = 0.0;
            while y + o[1] <= box_dims[1] {
                let mut g = GridBox {
                    pos: [x, y, 0.0],
                    dims: o,
                };
                g.pos[2] = placed
                    .iter()
                    .filter(|p| p.overlaps_xy(&g))
                    .map(GridBox::top)
                    .fold(0.0, f64::max);
                placed.push(g);
                drop_all(box_dims, rest, placed, height.max(g.top()), step, best);
                placed.pop();
                y += step;
            }
            x += step;
        }
    }
}

// --------------------------------------------------------------- log replay

pub fn points(v: &Value) -> Vec<Point2> {
    v.as_array()
        .expect("point list")
        .iter()
        .map(|p| {
            let a = p.as_array().expect("point");
            pt(a[0].as_f64().unwrap(), a[1].as_f64().unwrap())
        })
        .collect()
}

/// An arm's timed path rebuilt from a log record. Departure from each
/// waypoint follows from the next arrival, the segment length, the speed
/// and the per-segment overhead.
#[derive(Clone, Debug)]
pub struct ReplayMotion {
    pub pts: Vec<Point2>,
    pub arrive: Vec<f64>,
    pub depart: Vec<f64>,
}

impl ReplayMotion {
    pub fn from_record(detail: &BTreeMap<String, Value>, cfg: &SimConfig) -> ReplayMotion {
        let pts = points(&detail["waypoints"]);
        let arrive: Vec<f64> = detail["arrivals"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert_eq!(pts.len(), arrive.len());
        let n = pts.len();
        let depart = (0..n)
            .map(|i| {
                if i + 1 == n {
                    arrive[i]
                } else {
                    arrive[i + 1]
                        - pts[i].distance(pts[i + 1]) / cfg.ee_speed_mm_per_s
                        - cfg.segment_overhead_s
                }
            })
            .collect();
        ReplayMotion {
            pts,
            arrive,
            depart,
        }
    }

    pub fn position(&self, t: f64) -> Point2 {
        for i in 0..self.pts.len() {
            if t <= self.depart[i] {
                if i == 0 || t >= self.arrive[i] {
                    return self.pts[i];
                }
                let (a, b) = (self.pts[i - 1], self.pts[i]);
                let f = ((t - self.depart[i - 1]) / (self.arrive[i] - self.depart[i - 1]))
                    .clamp(0.0, 1.0);
                return pt(a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f);
            }
        }
        *self.pts.last().unwrap()
    }

    pub fn remaining(&self, t: f64) -> Vec<Point2> {
        let mut out = vec![self.position(t)];
        out.extend(
            self.pts
                .iter()
                .zip(&self.arrive)
                .filter(|(_, &a)| a > t)
                .map(|(p, _)| *p),
        );
        out
    }
}

pub fn polyline_distance(a: &[Point2], b: &[Point2]) -> f64 {
    fn segs(p: &[Point2]) -> Vec<(Point2, Point2)> {
        if p.len() == 1 {
            vec![(p[0], p[0])]
        } else {
            p.windows(2).map(|w| (w[0], w[1])).collect()
        }
    }
    let mut best = f64::INFINITY;
    for &(p, q) in &segs(a) {
        for &(r, s) in &segs(b) {
            let crosses = {
                let o = |a: Point2, b: Point2, c: Point2| {
                    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
                };
                let (d1, d2) = (o(p, q, r), o(p, q, s));
                let (d3, d4) = (o(r, s, p), o(r, s, q));
                d1 * d2 < 0.0 && d3 * d4 < 0.0
            };
            let d = if crosses {
                0.0
            } else {
                seg_dist(p, r, s)
                    .min(seg_dist(q, r, s))
                    .min(seg_dist(r, p, q))
                    .min(seg_dist(s, p, q))
            };
            best = best.min(d);
        }
    }
    best
}

#[derive(Debug, Default)]
pub struct GateReplay {
    pub assignments_checked: usize,
    pub min_clearance_mm: f64,
    pub violations: Vec<String>,
}

/// Walks a dual-arm log. At every task hand-out while the other arm is
/// busy, rebuilds the other arm's remaining path from its own records and
/// checks the new task keeps more than `threshold` away from it.
pub fn replay_gate(log: &EpisodeLog, cfg: &SimConfig, threshold: f64) -> GateReplay {
    let mut active: [Option<ReplayMotion>; 2] = [None, None];
    let mut out = GateReplay {
        min_clearance_mm: f64::INFINITY,
        ..Default::default()
    };
    for r in &log.records {
        let Some(arm) = r.arm else { continue };
        let i = arm.index();
        match r.kind {
            ActionKind::Assign | ActionKind::MoveAway => {
                let m = ReplayMotion::from_record(&r.detail, cfg);
                if let Some(other) = &active[Arm::other(arm).index()] {
                    let rest = other.remaining(r.time_s);
                    let d = polyline_distance(&m.pts, &rest);
                    out.assignments_checked += 1;
                    out.min_clearance_mm = out.min_clearance_mm.min(d);
                    if d <= threshold {
                        out.violations
                            .push(format!("{arm} at {:.2} s: clearance {d:.1} mm", r.time_s));
                    }
                    if let Some(logged) = r.detail.get("other_remaining") {
                        let logged = points(logged);
                        let same = logged.len() == rest.len()
                            && logged.iter().zip(&rest).all(|(a, b)| a.distance(*b) < 1e-6);
                        if !same {
                            out.violations.push(format!(
                                "{arm} at {:.2} s: logged other path differs from replay",
                                r.time_s
                            ));
                        }
                    }
                }
                active[i] = Some(m);
            }
            ActionKind::GraspFail | ActionKind::WeightReject => {
                active[i] = Some(ReplayMotion::from_record(&r.detail, cfg));
            }
            ActionKind::Idle => active[i] = None,
            _ => {}
        }
    }
    out
}

/// Stow rules from a log: grasp dwell intervals of the two arms never
/// overlap, and no more than two grasp attempts fall between consecutive
/// perceptions of the tote.
pub fn stow_rule_violations(log: &EpisodeLog) -> Vec<String> {
    let mut v = Vec::new();
    let mut intervals: Vec<(f64, f64, Arm)> = Vec::new();
    let mut since_perception = 0;
    for r in &log.records {
        match r.kind {
            ActionKind::Perceive => since_perception = 0,
            ActionKind::GraspAttempt => {
                since_perception += 1;
                if since_perception > 2 {
                    v.push(format!(
                        "third attempt since perception at {:.2} s",
                        r.time_s
                    ));
                }
                let d = r.duration_s().unwrap_or(0.0);
                intervals.push((r.time_s, r.time_s + d, r.arm.unwrap()));
            }
            _ => {}
        }
    }
    for (i, a) in intervals.iter().enumerate() {
        for b in &intervals[i + 1..] {
            if a.2 != b.2 && a.0 < b.1 && b.0 < a.1 {
                v.push(format!("tote shared at {:.2} s and {:.2} s", a.0, b.0));
            }
        }
    }
    v
}

/// Item conservation from the log: every scenario item ends in exactly
/// one container, and every placed item ends where it was last placed.
pub fn conservation_violations(scenario: &Scenario, log: &EpisodeLog) -> Vec<String> {
    let mut v = Vec::new();
    let locs = &log.outcome.locations;
    for it in &scenario.items {
        if !locs.contains_key(&it.id) {
            v.push(format!("{} missing", it.id));
        }
    }
    if locs.len() != scenario.items.len() {
        v.push(format!(
            "{} locations for {} items",
            locs.len(),
            scenario.items.len()
        ));
    }
    let mut last_place = BTreeMap::new();
    let mut carrying: [Option<String>; 2] = [None, None];
    for r in &log.records {
        let (Some(arm), Some(id)) = (r.arm, &r.item_id) else {
            continue;
        };
        match r.kind {
            ActionKind::GraspSuccess => {
                if carrying[arm.index()].is_some() {
                    v.push(format!("{arm} grasped {id} while carrying"));
                }
                carrying[arm.index()] = Some(id.to_string());
            }
            ActionKind::Place | ActionKind::WeightReject => {
                if carrying[arm.index()].as_deref() != Some(id.as_str()) {
                    v.push(format!("{arm} released {id} without holding it"));
                }
                carrying[arm.index()] = None;
                if r.kind == ActionKind::Place {
                    last_place.insert(id.clone(), r.detail_str("container").unwrap().to_string());
                }
            }
            _ => {}
        }
    }
    for (id, c) in &last_place {
        let end = locs.get(id).map(|k| k.name().to_string());
        if end.as_deref() != Some(c.as_str()) {
            v.push(format!("{id} placed in {c} but ends in {end:?}"));
        }
    }
    v
}

// ------------------------------------------------------------------ scenes

/// Three pie slices around (30, 30). Depth rises across each slice, so
/// every slice is higher than the next one at their shared edge and the
/// occlusion graph is the cycle p0 -> p1 -> p2 -> p0. The p2 -> p0 edge
/// is only higher near the center, so it carries the least evidence.
pub fn pinwheel_scene() -> binpick::report::SceneFile {
    use binpick::model::{Detection, SceneMaps};
    let (cx, cy, radius) = (30.0, 30.0, 26.0);
    let mut maps = SceneMaps::empty(pt(0.0, 0.0), 1.0, 60, 60);
    let sector = |x: f64, y: f64| -> Option<(usize, f64, f64)> {
        let (dx, dy) = (x - cx, y - cy);
        let r = (dx * dx + dy * dy).sqrt();
        if r > radius {
            return None;
        }
        let a = dy.atan2(dx).rem_euclid(std::f64::consts::TAU);
        let k = ((a / (std::f64::consts::TAU / 3.0)) as usize).min(2);
        let f = a / (std::f64::consts::TAU / 3.0) - k as f64;
        Some((k, f, r))
    };
    for row in 0..60 {
        for col in 0..60 {
            let (x, y) = (col as f64 + 0.5, row as f64 + 0.5);
            if let Some((k, f, r)) = sector(x, y) {
                let mut depth = 10.0 + 40.0 * f;
                if k == 2 && r > 12.0 {
                    depth = depth.min(12.0);
                }
                maps.set(col, row, Some(format!("p{k}").as_str().into()), depth);
            }
        }
    }
    let mut detections = Vec::new();
    for k in 0..3 {
        let start = k as f64 * std::f64::consts::TAU / 3.0;
        let mut pts = vec![pt(cx, cy)];
        for s in 0..=12 {
            let a = start + std::f64::consts::TAU / 3.0 * s as f64 / 12.0;
            pts.push(pt(
                cx + (radius - 1.0) * a.cos(),
                cy + (radius - 1.0) * a.sin(),
            ));
        }
        detections.push(Detection {
            item_id: format!("p{k}").as_str().into(),
            contour: Polygon::new(pts).unwrap(),
            confidence: 0.8,
            fail_count: 0,
        });
    }
    binpick::report::SceneFile {
        maps,
        detections,
        class_names: (0..3)
            .map(|k| (format!("p{k}").as_str().into(), format!("part {k}")))
            .collect(),
    }
}

// ----------------------------------------------------------------- planner

/// Pick task for `item` grasped at the source center.
pub fn marked_task(
    item: &str,
    source: binpick::model::ContainerKind,
    place: binpick::model::ContainerKind,
) -> binpick::coordination::MarkedTask {
    use binpick::coordination::{MarkedTask, RankKey, TaskRole};
    use binpick::geometry::Vec3;
    use binpick::grasping::{GraspAnchor, GraspKind, GraspPose};
    use binpick::model::{TaskKind, Workspace};
    let at = Workspace::default_for(TaskKind::Pick)
        .container(source)
        .unwrap()
        .origin_mm;
    MarkedTask {
        item_id: item.into(),
        role: TaskRole::PickTarget,
        source,
        grasp: GraspPose {
            kind: GraspKind::Suction,
            point_mm: Vec3::new(at.x, at.y, 50.0),
            normal: Vec3::new(0.0, 0.0, 1.0),
            pinch_yaw_rad: None,
            anchor: GraspAnchor::Pole,
        },
        place_container: place,
        place_point: at,
        place_pose: None,
        needs_rotation: false,
        rank: RankKey {
            fail_count: 0,
            occluders: 0,
            confidence: 1.0,
            item_id: item.into(),
        },
    }
}
