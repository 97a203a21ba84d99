//! High-level pick and stow planners.
//!
//! Perception results are ranked into a handful of marked tasks per
//! container; whenever an arm is free it takes the best marked task whose
//! path keeps clear of the other arm's remaining path.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clutter::{occluder_count, ClutterGraph};
use crate::error::{Error, Result};
use crate::geometry::{
    area_and_centroid, polyline_min_distance, segments_intersect, Point2, Segment,
};
use crate::grasping::{lift_to_pose, select_grasp_point, GraspKind, GraspPose};
use crate::model::{
    Arm, Container, ContainerKind, Detection, Item, ItemId, SceneMaps, Workspace, FAIL_COUNT_CAP,
};
use crate::placement::PlacementPose;

pub const MARKED_TASKS_PER_BIN: usize = 2;
pub const MAX_MOVE_AWAY_TASKS: usize = 2;
pub const MAX_STOW_ATTEMPTS_PER_PERCEPTION: u32 = 2;
pub const DEFAULT_MIN_SEPARATION_MM: f64 = 250.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskRole {
    PickTarget,
    MoveAway,
    Stow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaypointRole {
    Start,
    PreGrasp,
    Grasp,
    PostGrasp,
    PrePlace,
    Place,
    PostPlace,
    Home,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub point: Point2,
    pub role: WaypointRole,
}

/// A manipulation candidate that is not yet bound to an arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedTask {
    pub item_id: ItemId,
    pub role: TaskRole,
    pub source: ContainerKind,
    pub grasp: GraspPose,
    pub place_container: ContainerKind,
    pub place_point: Point2,
    pub place_pose: Option<PlacementPose>,
    /// Placement needs a turn that the grasp has to allow for.
    #[serde(default)]
    pub needs_rotation: bool,
    pub rank: RankKey,
}

impl MarkedTask {
    /// Binds the task to an arm currently at `start`. Pre/post waypoints
    /// sit directly above grasp and place, so they coincide in 2D.
    pub fn instantiate(&self, arm: Arm, start: Point2, home: Point2) -> Task {
        let g = self.grasp.point_2d();
        let p = self.place_point;
        let wp = |point, role| Waypoint { point, role };
        Task {
            arm,
            item_id: self.item_id.clone(),
            role: self.role,
            source: self.source,
            waypoints: vec![
                wp(start, WaypointRole::Start),
                wp(g, WaypointRole::PreGrasp),
                wp(g, WaypointRole::Grasp),
                wp(g, WaypointRole::PostGrasp),
                wp(p, WaypointRole::PrePlace),
                wp(p, WaypointRole::Place),
                wp(p, WaypointRole::PostPlace),
                wp(home, WaypointRole::Home),
            ],
            grasp: self.grasp,
            place_container: self.place_container,
            place_pose: self.place_pose.clone(),
            needs_rotation: self.needs_rotation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub arm: Arm,
    pub item_id: ItemId,
    pub role: TaskRole,
    pub source: ContainerKind,
    pub waypoints: Vec<Waypoint>,
    pub grasp: GraspPose,
    pub place_container: ContainerKind,
    pub place_pose: Option<PlacementPose>,
    #[serde(default)]
    pub needs_rotation: bool,
}

impl Task {
    pub fn points(&self) -> Vec<Point2> {
        self.waypoints.iter().map(|w| w.point).collect()
    }
}

/// Sort key for detections: fewer failures, fewer occluders, higher
/// confidence, then item id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankKey {
    pub fail_count: u32,
    pub occluders: usize,
    pub confidence: f64,
    pub item_id: ItemId,
}

impl Eq for RankKey {}

impl Ord for RankKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.fail_count
            .cmp(&other.fail_count)
            .then(self.occluders.cmp(&other.occluders))
            .then(other.confidence.total_cmp(&self.confidence))
            .then_with(|| self.item_id.cmp(&other.item_id))
    }
}

impl PartialOrd for RankKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedDetection {
    pub detection: Detection,
    pub key: RankKey,
}

impl RankedDetection {
    pub fn item_id(&self) -> &ItemId {
        &self.detection.item_id
    }

    pub fn centroid(&self) -> Point2 {
        area_and_centroid(&self.detection.contour)
            .map(|(_, c)| c)
            .unwrap_or_else(|_| self.detection.contour.vertices()[0])
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlannerState {
    pub fail_counters: BTreeMap<ItemId, u32>,
    /// Marked tasks per source container, best first.
    pub marked: BTreeMap<ContainerKind, Vec<MarkedTask>>,
    pub active: [Option<Task>; 2],
    pub attempts_since_perception: u32,
}

impl PlannerState {
    pub fn fails(&self, id: &ItemId) -> u32 {
        self.fail_counters.get(id).copied().unwrap_or(0)
    }

    pub fn record_failure(&mut self, id: &ItemId) {
        *self.fail_counters.entry(id.clone()).or_insert(0) += 1;
    }

    /// Replaces the marked tasks of a container. At most two pick targets
    /// may be marked per container.
    pub fn mark(&mut self, container: ContainerKind, tasks: Vec<MarkedTask>) -> Result<()> {
        let targets = tasks
            .iter()
            .filter(|t| t.role == TaskRole::PickTarget)
            .count();
        if targets > MARKED_TASKS_PER_BIN {
            return Err(Error::Argument(format!(
                "{targets} target tasks marked for {container}, at most {MARKED_TASKS_PER_BIN} allowed"
            )));
        }
        self.marked.insert(container, tasks);
        Ok(())
    }

    /// All marked tasks across containers, best rank first.
    pub fn candidates(&self) -> Vec<&MarkedTask> {
        let mut all: Vec<&MarkedTask> = self.marked.values().flatten().collect();
        all.sort_by(|a, b| a.rank.cmp(&b.rank));
        all
    }

    pub fn take_marked(&mut self, item: &ItemId) -> Option<MarkedTask> {
        for tasks in self.marked.values_mut() {
            if let Some(i) = tasks.iter().position(|t| &t.item_id == item) {
                return Some(tasks.remove(i));
            }
        }
        None
    }

    pub fn has_marked(&self, container: ContainerKind) -> bool {
        self.marked.get(&container).is_some_and(|t| !t.is_empty())
    }

    /// Counts a stow grasp attempt against the current perception.
    pub fn record_attempt(&mut self) -> Result<()> {
        if self.attempts_since_perception >= MAX_STOW_ATTEMPTS_PER_PERCEPTION {
            return Err(Error::Argument(
                "scene must be perceived again before another attempt".into(),
            ));
        }
        self.attempts_since_perception += 1;
        Ok(())
    }

    pub fn on_perception(&mut self) {
        self.attempts_since_perception = 0;
    }
}

fn key_for(det: &Detection, dag: &ClutterGraph, fails: &BTreeMap<ItemId, u32>) -> Result<RankKey> {
    if !dag.contains(&det.item_id) {
        return Err(Error::Argument(format!(
            "detection {} has no vertex in the clutter graph",
            det.item_id
        )));
    }
    Ok(RankKey {
        fail_count: fails.get(&det.item_id).copied().unwrap_or(det.fail_count),
        occluders: occluder_count(dag, &det.item_id)?,
        confidence: det.confidence,
        item_id: det.item_id.clone(),
    })
}

/// Orders pick detections by fail count, occluder count and confidence.
pub fn rank_pick_detections(
    dets: &[Detection],
    dag: &ClutterGraph,
    fails: &BTreeMap<ItemId, u32>,
) -> Result<Vec<RankedDetection>> {
    let mut ranked = dets
        .iter()
        .map(|d| {
            Ok(RankedDetection {
                detection: d.clone(),
                key: key_for(d, dag, fails)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(ranked)
}

/// Which items a freshly perceived storage bin should yield tasks for.
#[derive(Clone, Debug, PartialEq)]
pub struct PickChoice {
    pub detection: RankedDetection,
    pub role: TaskRole,
}

/// Marks the two best targets, or, when no target is visible or the best
/// one keeps failing, non-targets that lie on top of targets.
///
/// `hidden_targets` are remembered positions of order items that the
/// current perception did not see.
pub fn generate_pick_tasks(
    state: &PlannerState,
    dets: &[Detection],
    dag: &ClutterGraph,
    order: &BTreeSet<ItemId>,
    hidden_targets: &[Point2],
) -> Result<Vec<PickChoice>> {
    let ranked = rank_pick_detections(dets, dag, &state.fail_counters)?;
    let (targets, others): (Vec<_>, Vec<_>) = ranked
        .into_iter()
        .partition(|r| order.contains(r.item_id()));
    let stuck = targets
        .first()
        .is_none_or(|t| t.key.fail_count > FAIL_COUNT_CAP);

    let mark_targets = |targets: Vec<RankedDetection>| {
        targets
            .into_iter()
            .take(MARKED_TASKS_PER_BIN)
            .map(|detection| PickChoice {
                detection,
                role: TaskRole::PickTarget,
            })
            .collect::<Vec<_>>()
    };
    if !stuck {
        return Ok(mark_targets(targets));
    }

    let mut blockers: BTreeSet<ItemId> = BTreeSet::new();
    for t in &targets {
        blockers.extend(dag.ancestors(t.item_id())?);
    }
    let mut movers: Vec<RankedDetection> = others
        .into_iter()
        .filter(|o| {
            blockers.contains(o.item_id())
                || hidden_targets
                    .iter()
                    .any(|&p| o.detection.contour.contains(p))
        })
        .collect();
    // fewest occluders first; failures matter less for items we only move
    movers.sort_by(|a, b| {
        a.key
            .occluders
            .cmp(&b.key.occluders)
            .then(a.key.fail_count.cmp(&b.key.fail_count))
            .then(b.key.confidence.total_cmp(&a.key.confidence))
            .then_with(|| a.key.item_id.cmp(&b.key.item_id))
    });
    if movers.is_empty() {
        // nothing to clear; keep trying the targets we have
        return Ok(mark_targets(targets));
    }
    Ok(movers
        .into_iter()
        .take(MAX_MOVE_AWAY_TASKS)
        .map(|detection| PickChoice {
            detection,
            role: TaskRole::MoveAway,
        })
        .collect())
}

/// Parallel execution is allowed only when the two paths stay strictly
/// farther apart than `threshold_mm`.
pub fn tasks_compatible(t1: &[Point2], t2: &[Point2], threshold_mm: f64) -> bool {
    match polyline_min_distance(t1, t2) {
        Ok(d) => d > threshold_mm,
        Err(_) => true,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// Index into the candidate list.
    pub index: usize,
    pub task: Task,
    /// Clearance to the other arm's remaining path, if it has one.
    pub clearance_mm: Option<f64>,
}

/// Picks a task for `free_arm` starting at `arm_pose`.
///
/// `other_remaining` is the other arm's position followed by its unreached
/// waypoints, or `None` when it is idle. Tasks placing into the free arm's
/// own corner box are preferred; otherwise the best-ranked compatible task
/// wins.
pub fn assign_task(
    ws: &Workspace,
    free_arm: Arm,
    arm_pose: Point2,
    candidates: &[&MarkedTask],
    other_remaining: Option<&[Point2]>,
) -> Option<Assignment> {
    let reachable = |k: ContainerKind| ws.container(k).is_some_and(|c| c.reachable(free_arm));
    let mut compatible = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        if !reachable(c.source) || !reachable(c.place_container) {
            continue;
        }
        let task = c.instantiate(free_arm, arm_pose, ws.home(free_arm));
        let clearance = match other_remaining {
            Some(other) if !other.is_empty() => {
                let d = polyline_min_distance(&task.points(), other).ok()?;
                if d <= ws.collision_threshold_mm {
                    continue;
                }
                Some(d)
            }
            _ => None,
        };
        compatible.push(Assignment {
            index: i,
            task,
            clearance_mm: clearance,
        });
    }
    let corner = free_arm.corner_box();
    let pos = compatible
        .iter()
        .position(|a| a.task.place_container == corner)
        .unwrap_or(0);
    (!compatible.is_empty()).then(|| compatible.swap_remove(pos))
}

/// Stow candidates: best 3/4 by confidence, re-sorted by occluders, best
/// half of those.
pub fn rank_stow_detections(
    dets: &[Detection],
    dag: &ClutterGraph,
) -> Result<Vec<RankedDetection>> {
    let no_fails = BTreeMap::new();
    let mut ranked = dets
        .iter()
        .map(|d| {
            Ok(RankedDetection {
                detection: d.clone(),
                key: key_for(d, dag, &no_fails)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        b.key
            .confidence
            .total_cmp(&a.key.confidence)
            .then_with(|| a.key.item_id.cmp(&b.key.item_id))
    });
    ranked.truncate((3 * ranked.len()).div_ceil(4));
    // stable: equal occluder counts keep confidence order
    ranked.sort_by_key(|r| r.key.occluders);
    ranked.truncate(ranked.len().div_ceil(2));
    Ok(ranked)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StowAssignment {
    pub arm: Arm,
    pub candidate: RankedDetection,
}

/// One or two stow tasks for the next perception cycle.
///
/// A pair needs one of the two best candidates and a partner whose
/// centroid is more than `min_separation_mm` away; pairs go to random
/// arms. Otherwise only the most confident candidate is stowed, by the
/// first arm in `arms` (callers list the arm that frees up first).
pub fn select_stow_pair<R: Rng + ?Sized>(
    candidates: &[RankedDetection],
    min_separation_mm: f64,
    arms: &[Arm],
    rng: &mut R,
) -> Vec<StowAssignment> {
    if candidates.is_empty() || arms.is_empty() {
        return Vec::new();
    }
    let centroids: Vec<Point2> = candidates.iter().map(RankedDetection::centroid).collect();
    let mut pair = None;
    'outer: for x in 0..candidates.len().min(2) {
        for y in 0..candidates.len() {
            if y == x || (y < x && y < 2) {
                continue;
            }
            if centroids[x].distance(centroids[y]) > min_separation_mm {
                pair = Some((x, y));
                break 'outer;
            }
        }
    }
    match pair {
        Some((x, y)) => {
            let (first, second) = if arms.len() >= 2 {
                if rng.random_bool(0.5) {
                    (arms[0], arms[1])
                } else {
                    (arms[1], arms[0])
                }
            } else {
                (arms[0], arms[0])
            };
            vec![
                StowAssignment {
                    arm: first,
                    candidate: candidates[x].clone(),
                },
                StowAssignment {
                    arm: second,
                    candidate: candidates[y].clone(),
                },
            ]
        }
        None => {
            let best = candidates
                .iter()
                .min_by(|a, b| {
                    b.key
                        .confidence
                        .total_cmp(&a.key.confidence)
                        .then_with(|| a.key.item_id.cmp(&b.key.item_id))
                })
                .expect("non-empty");
            vec![StowAssignment {
                arm: arms[0],
                candidate: best.clone(),
            }]
        }
    }
}

/// Whether any part of a polyline lies over a container footprint.
pub fn polyline_over(container: &Container, pts: &[Point2]) -> bool {
    if pts.iter().any(|&p| container.contains(p)) {
        return true;
    }
    let (lo, hi) = (container.footprint_min(), container.footprint_max());
    let corners = [lo, Point2::new(hi.x, lo.y), hi, Point2::new(lo.x, hi.y)];
    let sides: Vec<Segment> = (0..4)
        .map(|i| Segment::new(corners[i], corners[(i + 1) % 4]))
        .collect();
    pts.windows(2).any(|w| {
        let s = Segment::new(w[0], w[1]);
        sides.iter().any(|side| segments_intersect(&s, side))
    })
}

/// A container is perceived again once nothing is marked for it and no
/// arm path crosses over it.
pub fn needs_perception(
    state: &PlannerState,
    container: &Container,
    arm_paths: &[Vec<Point2>],
) -> bool {
    !state.has_marked(container.kind) && !arm_paths.iter().any(|p| polyline_over(container, p))
}

/// Where and how a marked task should put its item down.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaceTarget {
    pub container: ContainerKind,
    pub point: Point2,
    pub pose: Option<PlacementPose>,
    pub needs_rotation: bool,
}

/// Builds a marked task: grasp point from the contour, 3D pose from the
/// maps, finger yaw toward the source container center.
pub fn mint_task(
    ranked: &RankedDetection,
    item: &Item,
    role: TaskRole,
    source: &Container,
    maps: &SceneMaps,
    kind: GraspKind,
    place: PlaceTarget,
) -> Result<MarkedTask> {
    let (point, anchor) = select_grasp_point(&ranked.detection.contour, item.mass_g)?;
    let grasp = lift_to_pose(point, anchor, kind, maps, source.origin_mm)?;
    Ok(MarkedTask {
        item_id: item.id.clone(),
        role,
        source: source.kind,
        grasp,
        place_container: place.container,
        place_point: place.point,
        place_pose: place.pose,
        needs_rotation: place.needs_rotation,
        rank: ranked.key.clone(),
    })
}
