//! Occlusion ("clutter") graph: which detected item lies on top of which.
//!
//! An edge `a -> b` means `a` occludes `b`; its weight is the number of
//! contour points supporting that claim. [`resolve`] turns the raw graph
//! into a DAG by collapsing back edges and removing a minimum-evidence
//! feedback arc set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Detection, ItemId, SceneMaps};

pub const DEFAULT_PROBE_OFFSET_PX: usize = 2;
pub const DEFAULT_HEIGHT_MARGIN_MM: f64 = 5.0;
pub const DEFAULT_MFAS_EDGE_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub class_name: String,
    pub confidence: f64,
}

pub type Edge = (ItemId, ItemId);

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClutterGraph {
    pub vertices: BTreeMap<ItemId, Vertex>,
    pub edges: BTreeMap<Edge, u32>,
}

impl ClutterGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: ItemId, class_name: impl Into<String>, confidence: f64) {
        self.vertices.insert(
            id,
            Vertex {
                class_name: class_name.into(),
                confidence,
            },
        );
    }

    /// Adds evidence to `from -> to`; both vertices must exist.
    pub fn add_evidence(&mut self, from: &ItemId, to: &ItemId, count: u32) {
        if count == 0 || from == to {
            return;
        }
        *self.edges.entry((from.clone(), to.clone())).or_insert(0) += count;
    }

    pub fn evidence(&self, from: &ItemId, to: &ItemId) -> Option<u32> {
        self.edges.get(&(from.clone(), to.clone())).copied()
    }

    pub fn contains(&self, id: &ItemId) -> bool {
        self.vertices.contains_key(id)
    }

    fn index(&self) -> (Vec<&ItemId>, BTreeMap<&ItemId, usize>) {
        let ids: Vec<&ItemId> = self.vertices.keys().collect();
        let pos = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        (ids, pos)
    }

    pub fn is_acyclic(&self) -> bool {
        let (ids, pos) = self.index();
        let edges: Vec<(usize, usize)> = self.edges.keys().map(|(a, b)| (pos[a], pos[b])).collect();
        acyclic(ids.len(), edges.iter().copied())
    }

    /// Transitive predecessors of `item`.
    pub fn ancestors(&self, item: &ItemId) -> Result<BTreeSet<ItemId>> {
        if !self.contains(item) {
            return Err(Error::Argument(format!(
                "item {item} is not in the clutter graph"
            )));
        }
        let mut preds: BTreeMap<&ItemId, Vec<&ItemId>> = BTreeMap::new();
        for (a, b) in self.edges.keys() {
            preds.entry(b).or_default().push(a);
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![item];
        while let Some(v) = stack.pop() {
            for &p in preds.get(v).map(Vec::as_slice).unwrap_or_default() {
                if p != item && seen.insert(p.clone()) {
                    stack.push(p);
                }
            }
        }
        Ok(seen)
    }

    /// Graphviz rendering: vertices labelled "class (confidence)", edges by
    /// evidence; vertices without predecessor are filled green.
    pub fn to_dot(&self) -> String {
        let has_pred: BTreeSet<&ItemId> = self.edges.keys().map(|(_, b)| b).collect();
        let mut out = String::from("digraph clutter {\n");
        for (id, v) in &self.vertices {
            let style = if has_pred.contains(id) {
                ""
            } else {
                ", style=filled, fillcolor=palegreen"
            };
            let _ = writeln!(
                out,
                "  \"{}\" [label=\"{} ({:.2})\"{}];",
                escape(id.as_str()),
                escape(&v.class_name),
                v.confidence,
                style
            );
        }
        for ((a, b), w) in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                escape(a.as_str()),
                escape(b.as_str()),
                w
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn acyclic(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut indeg = vec![0usize; n];
    let mut adj = vec![Vec::new(); n];
    for (a, b) in edges {
        adj[a].push(b);
        indeg[b] += 1;
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut visited = 0;
    while let Some(v) = stack.pop() {
        visited += 1;
        for &w in &adj[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                stack.push(w);
            }
        }
    }
    visited == n
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphParams {
    pub probe_offset_px: usize,
    pub height_margin_mm: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            probe_offset_px: DEFAULT_PROBE_OFFSET_PX,
            height_margin_mm: DEFAULT_HEIGHT_MARGIN_MM,
        }
    }
}

#[derive(Debug)]
pub struct BuildOutcome {
    pub graph: ClutterGraph,
    /// Detections whose contour could not be walked.
    pub skipped: Vec<(ItemId, Error)>,
}

/// 8-connected integer line walk from `a` (inclusive) to `b` (exclusive).
pub fn line_pixels(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    while (x, y) != b {
        out.push((x, y));
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// Pixel polygon of a detection contour, each vertex snapped to the
/// nearest pixel center.
fn contour_pixels(maps: &SceneMaps, det: &Detection) -> Result<Vec<(i64, i64)>> {
    let mut px = Vec::with_capacity(det.contour.vertices().len());
    for &v in det.contour.vertices() {
        let (cx, cy) = maps.to_pixel_coords(v);
        let p = (cx.round() as i64, cy.round() as i64);
        if !maps.in_bounds(p.0, p.1) {
            return Err(Error::OutOfBounds(det.item_id.clone()));
        }
        px.push(p);
    }
    Ok(px)
}

fn count_occluders(
    maps: &SceneMaps,
    det: &Detection,
    params: &GraphParams,
) -> Result<BTreeMap<ItemId, u32>> {
    let verts = contour_pixels(maps, det)?;
    let k = params.probe_offset_px as f64;
    let mut counts = BTreeMap::new();
    let n = verts.len();
    for i in 0..n {
        let (a, b) = (verts[i], verts[(i + 1) % n]);
        if a == b {
            continue;
        }
        let (dx, dy) = ((b.0 - a.0) as f64, (b.1 - a.1) as f64);
        let len = dx.hypot(dy);
        // counter-clockwise contour: the outside is to the right
        let off = (
            ((dy / len) * k).round() as i64,
            ((-dx / len) * k).round() as i64,
        );
        for (x, y) in line_pixels(a, b) {
            let (ox, oy) = (x + off.0, y + off.1);
            let (ix, iy) = (x - off.0, y - off.1);
            if !maps.in_bounds(ox, oy) || !maps.in_bounds(ix, iy) {
                continue;
            }
            let (ox, oy, ix, iy) = (ox as usize, oy as usize, ix as usize, iy as usize);
            let Some(outer) = maps.label_at(ox, oy) else {
                continue;
            };
            if outer == &det.item_id {
                continue;
            }
            if maps.depth_at(ox, oy) > maps.depth_at(ix, iy) + params.height_margin_mm {
                *counts.entry(outer.clone()).or_insert(0) += 1;
            }
        }
    }
    Ok(counts)
}

/// Raw occlusion graph from contour probes. May contain cycles.
pub fn build_graph(
    maps: &SceneMaps,
    detections: &[Detection],
    class_names: &BTreeMap<ItemId, String>,
    params: &GraphParams,
) -> BuildOutcome {
    let mut graph = ClutterGraph::new();
    for d in detections {
        let class = class_names
            .get(&d.item_id)
            .cloned()
            .unwrap_or_else(|| d.item_id.to_string());
        graph.add_vertex(d.item_id.clone(), class, d.confidence);
    }
    let mut skipped = Vec::new();
    for d in detections {
        match count_occluders(maps, d, params) {
            Ok(counts) => {
                for (occluder, n) in counts {
                    // occluders that were not detected have no vertex
                    if graph.contains(&occluder) {
                        graph.add_evidence(&occluder, &d.item_id, n);
                    }
                }
            }
            Err(e) => {
                log::debug!("skipping contour of {}: {e}", d.item_id);
                skipped.push((d.item_id.clone(), e));
            }
        }
    }
    BuildOutcome { graph, skipped }
}

/// Replaces every edge/back-edge pair by a single edge carrying the
/// evidence difference; equal pairs cancel.
pub fn simplify_two_cycles(g: &ClutterGraph) -> ClutterGraph {
    let mut out = ClutterGraph {
        vertices: g.vertices.clone(),
        edges: BTreeMap::new(),
    };
    for ((a, b), &w) in &g.edges {
        match g.evidence(b, a) {
            None => {
                out.edges.insert((a.clone(), b.clone()), w);
            }
            Some(back) if w > back => {
                out.edges.insert((a.clone(), b.clone()), w - back);
            }
            Some(_) => {}
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackArcSet {
    /// Removed edges with their evidence, sorted by edge id.
    pub removed: Vec<(Edge, u32)>,
    pub dag: ClutterGraph,
}

impl FeedbackArcSet {
    pub fn removed_evidence(&self) -> u64 {
        self.removed.iter().map(|(_, w)| *w as u64).sum()
    }
}

/// Strongly connected component id per vertex (Tarjan, iterative).
fn scc(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// Exact minimum-evidence feedback arc set by subset enumeration.
///
/// Only edges inside a strongly connected component can lie on a cycle,
/// so only those are enumerated; `edge_cap` bounds their number. Among
/// subsets with equal evidence the lexicographically smallest sorted edge
/// list wins.
pub fn min_feedback_arc_set(g: &ClutterGraph, edge_cap: usize) -> Result<FeedbackArcSet> {
    let (ids, pos) = g.index();
    let n = ids.len();
    let all: Vec<(usize, usize, u32)> = g
        .edges
        .iter()
        .map(|((a, b), &w)| (pos[a], pos[b], w))
        .collect();
    let mut adj = vec![Vec::new(); n];
    for &(a, b, _) in &all {
        adj[a].push(b);
    }
    let comp = scc(n, &adj);
    // BTreeMap iteration order keeps candidates sorted by edge id
    let (cands, fixed): (Vec<_>, Vec<_>) = all
        .iter()
        .copied()
        .partition(|&(a, b, _)| comp[a] == comp[b]);
    if cands.is_empty() {
        return Ok(FeedbackArcSet {
            removed: Vec::new(),
            dag: g.clone(),
        });
    }
    if cands.len() > edge_cap {
        return Err(Error::GraphTooLarge {
            edges: cands.len(),
            cap: edge_cap,
        });
    }

    let m = cands.len();
    let mut best: Option<(u64, u64)> = None; // (sum, mask)
    for mask in 0u64..(1u64 << m) {
        let sum: u64 = (0..m)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| cands[i].2 as u64)
            .sum();
        if let Some((bs, bm)) = best {
            if sum > bs || (sum == bs && !lex_smaller(mask, bm, m)) {
                continue;
            }
        }
        let kept = cands
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 0)
            .map(|(_, &(a, b, _))| (a, b))
            .chain(fixed.iter().map(|&(a, b, _)| (a, b)));
        if acyclic(n, kept) {
            best = Some((sum, mask));
        }
    }
    let (_, mask) = best.expect("removing every cyclic edge yields a DAG");
    let mut dag = g.clone();
    let mut removed = Vec::new();
    for (i, &(a, b, w)) in cands.iter().enumerate() {
        if mask >> i & 1 == 1 {
            let e = (ids[a].clone(), ids[b].clone());
            dag.edges.remove(&e);
            removed.push((e, w));
        }
    }
    Ok(FeedbackArcSet { removed, dag })
}

/// Lexicographic comparison of two subsets given as bit masks over a
/// sorted candidate list (bit i = i-th smallest edge).
fn lex_smaller(a: u64, b: u64, m: usize) -> bool {
    let la: Vec<usize> = (0..m).filter(|i| a >> i & 1 == 1).collect();
    let lb: Vec<usize> = (0..m).filter(|i| b >> i & 1 == 1).collect();
    la < lb
}

/// Number of distinct items transitively above `item`.
pub fn occluder_count(dag: &ClutterGraph, item: &ItemId) -> Result<usize> {
    Ok(dag.ancestors(item)?.len())
}

/// Full pipeline: build, collapse two-cycles, remove a minimum feedback
/// arc set.
#[derive(Debug)]
pub struct Resolved {
    pub raw: ClutterGraph,
    pub fas: FeedbackArcSet,
    pub skipped: Vec<(ItemId, Error)>,
}

impl Resolved {
    pub fn dag(&self) -> &ClutterGraph {
        &self.fas.dag
    }
}

pub fn resolve(
    maps: &SceneMaps,
    detections: &[Detection],
    class_names: &BTreeMap<ItemId, String>,
    params: &GraphParams,
) -> Result<Resolved> {
    let BuildOutcome { graph, skipped } = build_graph(maps, detections, class_names, params);
    let fas = min_feedback_arc_set(&simplify_two_cycles(&graph), DEFAULT_MFAS_EDGE_CAP)?;
    Ok(Resolved {
        raw: graph,
        fas,
        skipped,
    })
}
