//! Discrete-event loop for one stow or pick episode.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

use crate::clutter::{resolve, ClutterGraph, GraphParams};
use crate::coordination::{
    assign_task, generate_pick_tasks, mint_task, needs_perception, polyline_over,
    rank_pick_detections, rank_stow_detections, select_stow_pair, tasks_compatible, MarkedTask,
    PickChoice, PlaceTarget, PlannerState, RankedDetection, Task, TaskRole, Waypoint, WaypointRole,
};
use crate::error::Result;
use crate::geometry::{polyline_min_distance, Point2};
use crate::grasping::{
    choose_grasp_kind, lift_to_pose, perturb_grasp, verify_weight, GraspNoise, WeightCheck,
};
use crate::model::{Arm, ContainerKind, Detection, Item, ItemId, Scenario, TaskKind, Workspace};
use crate::placement::{plan_placement, PlacementPose, PlacementProblem, Rotation};

use super::config::SimConfig;
use super::log::{ActionKind, EpisodeLog, Outcome, Record};
use super::scene::{render, ContainerScene, SimScene};

/// Stream offset separating scene sampling from in-episode randomness, so
/// runs that differ only in arm count start from the same scene.
const EPISODE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Outcome of the `attempt`-th grasp on `item`. Keyed rather than drawn from
/// the episode stream so that runs with one and two arms see the same luck.
fn grasp_succeeds(seed: u64, item: &str, attempt: u64, rate: f64) -> bool {
    // FNV-1a
    let key = item.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    });
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&key.to_le_bytes());
    bytes[16..24].copy_from_slice(&attempt.to_le_bytes());
    ChaCha8Rng::from_seed(bytes).random_bool(rate)
}

/// Timed motion along a task's waypoints.
#[derive(Clone, Debug)]
struct Motion {
    points: Vec<Point2>,
    arrive: Vec<f64>,
    depart: Vec<f64>,
}

impl Motion {
    fn new(wps: &[Waypoint], t0: f64, cfg: &SimConfig) -> Motion {
        let mut arrive = Vec::with_capacity(wps.len());
        let mut depart = Vec::with_capacity(wps.len());
        for (i, w) in wps.iter().enumerate() {
            let a = if i == 0 {
                t0
            } else {
                let len = wps[i - 1].point.distance(w.point);
                depart[i - 1] + len / cfg.ee_speed_mm_per_s + cfg.segment_overhead_s
            };
            let dwell = match w.role {
                WaypointRole::Grasp => cfg.grasp_dwell_s,
                WaypointRole::Place => cfg.release_dwell_s,
                _ => 0.0,
            };
            arrive.push(a);
            depart.push(a + dwell);
        }
        Motion {
            points: wps.iter().map(|w| w.point).collect(),
            arrive,
            depart,
        }
    }

    fn position(&self, t: f64) -> Point2 {
        for i in 0..self.points.len() {
            if t <= self.depart[i] {
                if i == 0 || t >= self.arrive[i] {
                    return self.points[i];
                }
                let (a, b) = (self.points[i - 1], self.points[i]);
                let f = (t - self.depart[i - 1]) / (self.arrive[i] - self.depart[i - 1]);
                return a + (b - a) * f.clamp(0.0, 1.0);
            }
        }
        *self.points.last().expect("non-empty motion")
    }

    /// Holds the arm at waypoint `i` for `dt` longer.
    fn delay_from(&mut self, i: usize, dt: f64) {
        self.depart[i] += dt;
        for j in i + 1..self.points.len() {
            self.arrive[j] += dt;
            self.depart[j] += dt;
        }
    }

    /// Current position followed by every waypoint not yet reached.
    fn remaining(&self, t: f64) -> Vec<Point2> {
        let mut out = vec![self.position(t)];
        out.extend(
            self.points
                .iter()
                .zip(&self.arrive)
                .filter(|(_, &a)| a > t)
                .map(|(p, _)| *p),
        );
        out
    }
}

#[derive(Clone, Debug)]
struct Active {
    task: Task,
    motion: Motion,
    assigned_at: f64,
    carrying: bool,
    ended_by: &'static str,
}

impl Active {
    fn index_of(&self, role: WaypointRole) -> Option<usize> {
        self.task.waypoints.iter().position(|w| w.role == role)
    }

    fn arrival(&self, role: WaypointRole) -> f64 {
        self.motion.arrive[self.index_of(role).expect("role present")]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    /// Stow: the arm is above the tote and asks for access.
    AtTote(Arm),
    GraspStart(Arm),
    GraspDone(Arm),
    Weigh(Arm),
    Place(Arm),
    Home(Arm),
    PerceptionDone(ContainerKind),
    /// An arm path stops covering a container that waits for perception.
    Wake,
}

#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

#[derive(Default)]
struct Queue {
    events: Vec<Event>,
    seq: u64,
}

impl Queue {
    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.events.push(Event {
            time,
            seq: self.seq,
            kind,
        });
    }

    fn peek_time(&self) -> Option<f64> {
        self.events.iter().map(|e| e.time).min_by(f64::total_cmp)
    }

    fn pop(&mut self) -> Option<Event> {
        let i = (0..self.events.len()).min_by(|&a, &b| {
            let (x, y) = (&self.events[a], &self.events[b]);
            x.time.total_cmp(&y.time).then(x.seq.cmp(&y.seq))
        })?;
        Some(self.events.swap_remove(i))
    }
}

struct PendingPerception {
    tasks: Vec<MarkedTask>,
    stow_arms: BTreeMap<ItemId, Arm>,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    task_kind: TaskKind,
    ws: Workspace,
    arms: Vec<Arm>,
    items: BTreeMap<ItemId, Item>,
    class_names: BTreeMap<ItemId, String>,
    scene: SimScene,
    rng: ChaCha8Rng,
    /// Grasp attempts so far per item.
    attempts: BTreeMap<ItemId, u64>,
    state: PlannerState,
    /// Pick: destination box per order item.
    box_of: BTreeMap<ItemId, ContainerKind>,
    placed_in_box: BTreeMap<ContainerKind, Vec<PlacementPose>>,
    remaining_goal: BTreeSet<ItemId>,
    goal: usize,
    stow_arm: BTreeMap<ItemId, Arm>,
    active: [Option<Active>; 2],
    tote_holder: Option<Arm>,
    /// Arm waiting above the tote for access.
    tote_waiting: Option<Arm>,
    /// One pipeline per container.
    perceiving: BTreeMap<ContainerKind, PendingPerception>,
    dirty: BTreeSet<ContainerKind>,
    last_perceived: BTreeMap<ContainerKind, f64>,
    queue: Queue,
    log: EpisodeLog,
    now: f64,
    goal_time: Option<f64>,
    wake_at: Option<f64>,
}

fn detail(pairs: Vec<(&str, Value)>) -> BTreeMap<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn role_name(r: TaskRole) -> &'static str {
    match r {
        TaskRole::PickTarget => "pick_target",
        TaskRole::MoveAway => "move_away",
        TaskRole::Stow => "stow",
    }
}

fn points_json(pts: &[Point2]) -> Value {
    json!(pts.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>())
}

/// Earliest time after `now` at which the remaining path no longer
/// crosses the container. Remaining paths only shrink, so the crossing
/// predicate flips at most once.
fn clear_time(m: &Motion, c: &crate::model::Container, now: f64) -> f64 {
    let end = *m.arrive.last().expect("non-empty motion");
    if polyline_over(c, &m.remaining(end)) {
        return end;
    }
    let (mut lo, mut hi) = (now, end);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if polyline_over(c, &m.remaining(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// The scene an episode with this seed starts from: source items shuffled,
/// dealt round-robin over the source containers and dropped uniformly.
pub fn initial_scene(scenario: &Scenario, ws: &Workspace, seed: u64) -> Result<SimScene> {
    let mut scene_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<&Item> = scenario.items.iter().collect();
    order.shuffle(&mut scene_rng);

    let mut scene = SimScene::default();
    for c in &ws.containers {
        scene.containers.insert(c.kind, ContainerScene::empty(c));
    }
    let sources: Vec<ContainerKind> = match scenario.task {
        TaskKind::Stow => vec![ContainerKind::Tote],
        TaskKind::Pick => vec![
            ContainerKind::StorageBinLeft,
            ContainerKind::StorageBinRight,
        ],
    };
    for (i, item) in order.iter().enumerate() {
        let src = sources[i % sources.len()];
        scene
            .get_mut(src)
            .expect("source container validated")
            .drop_item(item, &mut scene_rng)?;
    }
    Ok(scene)
}

/// Runs one episode to its goal, to a dead end, or to the time limit.
pub fn run_episode(scenario: &Scenario, cfg: &SimConfig) -> Result<EpisodeLog> {
    cfg.validate()?;
    scenario.validate()?;
    let mut sim = Sim::new(scenario, cfg)?;
    sim.run();
    Ok(sim.finish())
}

impl<'a> Sim<'a> {
    fn new(scenario: &Scenario, cfg: &'a SimConfig) -> Result<Sim<'a>> {
        let (ws, arms) = if cfg.arms == 2 {
            (scenario.workspace.clone(), Arm::BOTH.to_vec())
        } else {
            (scenario.workspace.single_arm(Arm::Left), vec![Arm::Left])
        };
        let scene = initial_scene(scenario, &ws, cfg.seed)?;

        let boxes: Vec<ContainerKind> = [
            ContainerKind::BoxLeftCorner,
            ContainerKind::BoxCenter,
            ContainerKind::BoxRightCorner,
        ]
        .into_iter()
        .filter(|k| ws.container(*k).is_some())
        .collect();
        let mut box_of = BTreeMap::new();
        if scenario.task == TaskKind::Pick {
            for (i, id) in scenario.order.iter().enumerate() {
                box_of.insert(id.clone(), boxes[i % boxes.len()]);
            }
        }
        let remaining_goal: BTreeSet<ItemId> = match scenario.task {
            TaskKind::Stow => scenario.items.iter().map(|i| i.id.clone()).collect(),
            TaskKind::Pick => scenario.order.iter().cloned().collect(),
        };
        Ok(Sim {
            cfg,
            task_kind: scenario.task,
            items: scenario
                .items
                .iter()
                .map(|i| (i.id.clone(), i.clone()))
                .collect(),
            class_names: scenario
                .items
                .iter()
                .map(|i| (i.id.clone(), i.class_name.clone()))
                .collect(),
            dirty: scene
                .containers
                .iter()
                .filter(|(_, c)| !c.items.is_empty())
                .map(|(k, _)| *k)
                .collect(),
            ws,
            arms,
            scene,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ EPISODE_STREAM),
            attempts: BTreeMap::new(),
            state: PlannerState::default(),
            box_of,
            placed_in_box: BTreeMap::new(),
            goal: remaining_goal.len(),
            remaining_goal,
            stow_arm: BTreeMap::new(),
            active: [None, None],
            tote_holder: None,
            tote_waiting: None,
            perceiving: BTreeMap::new(),
            last_perceived: BTreeMap::new(),
            queue: Queue::default(),
            log: EpisodeLog::default(),
            now: 0.0,
            goal_time: None,
            wake_at: None,
        })
    }

    fn record(
        &mut self,
        arm: Option<Arm>,
        kind: ActionKind,
        item: Option<&ItemId>,
        d: Vec<(&str, Value)>,
    ) {
        self.log.push(Record {
            time_s: self.now,
            arm,
            kind,
            item_id: item.cloned(),
            detail: detail(d),
        });
    }

    fn run(&mut self) {
        loop {
            if self.remaining_goal.is_empty() {
                self.goal_time = Some(self.now);
                return;
            }
            self.plan();
            let Some(t) = self.queue.peek_time() else {
                log::debug!("no further events at {:.1} s", self.now);
                return;
            };
            if t > self.cfg.max_episode_s {
                self.now = self.cfg.max_episode_s;
                return;
            }
            // handle every event at this instant before planning again
            while self.queue.peek_time() == Some(t) {
                let e = self.queue.pop().expect("peeked");
                self.now = e.time;
                self.handle(e.kind);
                if self.remaining_goal.is_empty() {
                    break;
                }
            }
        }
    }

    fn finish(mut self) -> EpisodeLog {
        let locations = self
            .items
            .keys()
            .filter_map(|id| self.scene.locate(id).map(|k| (id.clone(), k)))
            .collect();
        self.log.outcome = Outcome {
            completed: self.goal - self.remaining_goal.len(),
            goal: self.goal,
            goal_met: self.remaining_goal.is_empty(),
            total_time_s: self.goal_time.unwrap_or(self.now),
            locations,
        };
        self.log
    }

    fn arm_paths(&self) -> Vec<Vec<Point2>> {
        self.active
            .iter()
            .flatten()
            .map(|a| a.motion.remaining(self.now))
            .collect()
    }

    fn free_arms(&self) -> Vec<Arm> {
        self.arms
            .iter()
            .copied()
            .filter(|a| self.active[a.index()].is_none())
            .collect()
    }

    fn plan(&mut self) {
        for arm in self.free_arms() {
            match self.task_kind {
                TaskKind::Stow => self.assign_stow(arm),
                TaskKind::Pick => self.assign_pick(arm),
            }
        }
        self.maybe_perceive();
    }

    fn assign_stow(&mut self, arm: Arm) {
        let Some(item) = self
            .state
            .marked
            .get(&ContainerKind::Tote)
            .and_then(|ts| {
                ts.iter()
                    .find(|t| self.stow_arm.get(&t.item_id) == Some(&arm))
            })
            .map(|t| t.item_id.clone())
        else {
            return;
        };
        if self.state.record_attempt().is_err() {
            return;
        }
        let marked = self.state.take_marked(&item).expect("found above");
        let task = marked.instantiate(arm, self.ws.home(arm), self.ws.home(arm));
        self.start_task(task, None);
    }

    fn assign_pick(&mut self, arm: Arm) {
        let other = self.arms.iter().copied().find(|&a| a != arm);
        let other_remaining = other.and_then(|o| {
            self.active[o.index()]
                .as_ref()
                .map(|a| a.motion.remaining(self.now))
        });
        let candidates = self.state.candidates();
        let Some(a) = assign_task(
            &self.ws,
            arm,
            self.ws.home(arm),
            &candidates,
            other_remaining.as_deref(),
        ) else {
            if let Some(o) = other {
                self.wake_when_gate_clears(arm, o);
            }
            return;
        };
        let item = a.task.item_id.clone();
        self.state.take_marked(&item);
        let gate = other_remaining.map(|r| (r, a.clearance_mm));
        self.start_task(a.task, gate);
    }

    fn start_task(&mut self, mut task: Task, mut gate: Option<(Vec<Point2>, Option<f64>)>) {
        let arm = task.arm;
        if self.state.fails(&task.item_id) > 0 {
            let gated = task.clone();
            self.renoise_grasp(&mut task);
            // the gate holds for the executed path, not the planned one
            if let Some((other, clearance)) = gate.as_mut().filter(|(o, _)| !o.is_empty()) {
                match polyline_min_distance(&task.points(), other) {
                    Ok(d) if d > self.ws.collision_threshold_mm => *clearance = Some(d),
                    _ => task = gated,
                }
            }
        }
        let motion = Motion::new(&task.waypoints, self.now, self.cfg);
        let kind = if task.role == TaskRole::MoveAway {
            ActionKind::MoveAway
        } else {
            ActionKind::Assign
        };
        let mut d = vec![
            ("role", json!(role_name(task.role))),
            ("source", json!(task.source)),
            ("place_container", json!(task.place_container)),
            ("grasp_kind", json!(task.grasp.kind)),
            ("grasp_anchor", json!(task.grasp.anchor)),
            ("waypoints", points_json(&motion.points)),
            ("arrivals", json!(motion.arrive)),
            ("rank_fail_count", json!(self.state.fails(&task.item_id))),
            ("needs_rotation", json!(task.needs_rotation)),
        ];
        if let Some((other, clearance)) = gate {
            d.push(("other_remaining", points_json(&other)));
            d.push(("clearance_mm", json!(clearance)));
        }
        self.record(Some(arm), kind, Some(&task.item_id), d);
        let active = Active {
            task,
            motion,
            assigned_at: self.now,
            carrying: false,
            ended_by: "placed",
        };
        if self.task_kind == TaskKind::Stow {
            self.queue.push(
                active.arrival(WaypointRole::PreGrasp),
                EventKind::AtTote(arm),
            );
        } else {
            self.queue.push(
                active.arrival(WaypointRole::Grasp),
                EventKind::GraspStart(arm),
            );
        }
        self.active[arm.index()] = Some(active);
    }

    fn on_at_tote(&mut self, arm: Arm) {
        if self.tote_holder.is_some() {
            self.tote_waiting = Some(arm);
            return;
        }
        self.tote_holder = Some(arm);
        let a = self.active[arm.index()].as_mut().expect("active");
        let i = a.index_of(WaypointRole::PreGrasp).expect("pre-grasp");
        let late = self.now - a.motion.depart[i];
        if late > 0.0 {
            a.motion.delay_from(i, late);
        }
        let t = a.arrival(WaypointRole::Grasp);
        self.queue.push(t, EventKind::GraspStart(arm));
    }

    fn release_tote(&mut self, arm: Arm) {
        if self.tote_holder != Some(arm) {
            return;
        }
        self.tote_holder = None;
        if let Some(w) = self.tote_waiting.take() {
            self.on_at_tote(w);
        }
    }

    /// Repeated attempts on the same item move the grasp slightly.
    fn renoise_grasp(&mut self, task: &mut Task) {
        let noisy = perturb_grasp(&task.grasp, &GraspNoise::default(), &mut self.rng);
        let Some(src) = self.scene.get(task.source) else {
            return;
        };
        let maps = render(src, self.cfg.map_resolution_mm_per_px).maps;
        let p = noisy.point_2d();
        let on_item = maps
            .pixel_of(p)
            .is_some_and(|(c, r)| maps.label_at(c, r) == Some(&task.item_id));
        if !on_item {
            return;
        }
        let center = self
            .ws
            .container(task.source)
            .map(|c| c.origin_mm)
            .unwrap_or(p);
        if let Ok(mut g) = lift_to_pose(p, task.grasp.anchor, task.grasp.kind, &maps, center) {
            if noisy.pinch_yaw_rad.is_some() {
                g.pinch_yaw_rad = noisy.pinch_yaw_rad;
            }
            task.grasp = g;
            for w in &mut task.waypoints {
                if matches!(
                    w.role,
                    WaypointRole::PreGrasp | WaypointRole::Grasp | WaypointRole::PostGrasp
                ) {
                    w.point = p;
                }
            }
        }
    }

    fn handle(&mut self, kind: EventKind) {
        match kind {
            EventKind::AtTote(arm) => self.on_at_tote(arm),
            EventKind::GraspStart(arm) => self.on_grasp_start(arm),
            EventKind::GraspDone(arm) => self.on_grasp_done(arm),
            EventKind::Weigh(arm) => self.on_weigh(arm),
            EventKind::Place(arm) => self.on_place(arm),
            EventKind::Home(arm) => self.on_home(arm),
            EventKind::PerceptionDone(k) => self.on_perception_done(k),
            EventKind::Wake => self.wake_at = None,
        }
    }

    fn active(&self, arm: Arm) -> &Active {
        self.active[arm.index()]
            .as_ref()
            .expect("event for an active arm")
    }

    fn on_grasp_start(&mut self, arm: Arm) {
        let item = self.active(arm).task.item_id.clone();
        let dwell = self.cfg.grasp_dwell_s;
        self.record(
            Some(arm),
            ActionKind::GraspAttempt,
            Some(&item),
            vec![("duration_s", json!(dwell))],
        );
        self.queue.push(self.now + dwell, EventKind::GraspDone(arm));
    }

    fn on_grasp_done(&mut self, arm: Arm) {
        let (item, source) = {
            let a = self.active(arm);
            (a.task.item_id.clone(), a.task.source)
        };
        let still_there = self.scene.get(source).is_some_and(|c| c.contains(&item));
        let n = self.attempts.entry(item.clone()).or_insert(0);
        let attempt = *n;
        *n += 1;
        let success = still_there
            && grasp_succeeds(
                self.cfg.seed,
                item.as_str(),
                attempt,
                self.cfg.grasp_success_rate,
            );
        if success {
            self.scene.get_mut(source).expect("source").remove(&item);
            self.dirty.insert(source);
            let a = self.active[arm.index()].as_mut().expect("active");
            a.carrying = true;
            let t = a.arrival(WaypointRole::PostGrasp);
            self.record(Some(arm), ActionKind::GraspSuccess, Some(&item), vec![]);
            self.queue.push(t, EventKind::Weigh(arm));
        } else {
            self.state.record_failure(&item);
            // the item slips back to a fresh pose in its container
            if still_there {
                let it = self.items[&item].clone();
                let c = self.scene.get_mut(source).expect("source");
                c.remove(&item);
                if c.drop_item(&it, &mut self.rng).is_err() {
                    log::warn!("could not drop {item} back into {source}");
                    c.stack_centered(&it);
                }
                self.container_changed(source);
            }
            self.release_tote(arm);
            let from = self.active(arm).motion.position(self.now);
            let wps = [
                Waypoint {
                    point: from,
                    role: WaypointRole::Grasp,
                },
                Waypoint {
                    point: from,
                    role: WaypointRole::PostGrasp,
                },
                Waypoint {
                    point: self.ws.home(arm),
                    role: WaypointRole::Home,
                },
            ];
            self.replan_home(arm, &wps, ActionKind::GraspFail, "grasp_fail");
        }
    }

    fn replan_home(&mut self, arm: Arm, wps: &[Waypoint], kind: ActionKind, reason: &'static str) {
        let mut motion = Motion::new(wps, self.now, self.cfg);
        // the first waypoint is where the arm already is
        motion.depart[0] = self.now;
        if wps.len() > 1 {
            let mut t = self.now;
            for i in 1..wps.len() {
                t += wps[i - 1].point.distance(wps[i].point) / self.cfg.ee_speed_mm_per_s
                    + self.cfg.segment_overhead_s;
                motion.arrive[i] = t;
                motion.depart[i] = t;
            }
        }
        let home_t = *motion.arrive.last().expect("non-empty");
        let (item, pts, arr) = {
            let a = self.active[arm.index()].as_mut().expect("active");
            a.task.waypoints = wps.to_vec();
            a.motion = motion;
            a.carrying = false;
            a.ended_by = reason;
            (
                a.task.item_id.clone(),
                a.motion.points.clone(),
                a.motion.arrive.clone(),
            )
        };
        let fails = self.state.fails(&item);
        self.record(
            Some(arm),
            kind,
            Some(&item),
            vec![
                ("fail_count", json!(fails)),
                ("waypoints", points_json(&pts)),
                ("arrivals", json!(arr)),
            ],
        );
        self.queue.push(home_t, EventKind::Home(arm));
    }

    fn on_weigh(&mut self, arm: Arm) {
        let (item, source) = {
            let a = self.active(arm);
            (a.task.item_id.clone(), a.task.source)
        };
        let mass = self.items[&item].mass_g;
        let noise = if self.cfg.scale_noise_g > 0.0 {
            Normal::new(0.0, self.cfg.scale_noise_g)
                .expect("valid sigma")
                .sample(&mut self.rng)
        } else {
            0.0
        };
        let measured = mass + noise;
        self.release_tote(arm);
        match verify_weight(mass, measured) {
            WeightCheck::Accept => {
                let t = self.active(arm).arrival(WaypointRole::Place);
                self.queue.push(t, EventKind::Place(arm));
            }
            WeightCheck::Reject => {
                self.state.record_failure(&item);
                let it = self.items[&item].clone();
                let c = self.scene.get_mut(source).expect("source");
                if c.drop_item(&it, &mut self.rng).is_err() {
                    log::warn!("could not drop {item} back into {source}");
                    c.stack_centered(&it);
                }
                self.container_changed(source);
                let from = self.active(arm).motion.position(self.now);
                let wps = [
                    Waypoint {
                        point: from,
                        role: WaypointRole::PostGrasp,
                    },
                    Waypoint {
                        point: self.ws.home(arm),
                        role: WaypointRole::Home,
                    },
                ];
                self.replan_home(arm, &wps, ActionKind::WeightReject, "weight_reject");
                if let Some(r) = self.log.records.last_mut() {
                    r.detail.insert("measured_g".into(), json!(measured));
                    r.detail.insert("expected_g".into(), json!(mass));
                }
            }
        }
    }

    fn on_place(&mut self, arm: Arm) {
        let (item, dest, role) = {
            let a = self.active(arm);
            (a.task.item_id.clone(), a.task.place_container, a.task.role)
        };
        let it = self.items[&item].clone();
        let mut d = vec![
            ("container", json!(dest)),
            ("duration_s", json!(self.cfg.release_dwell_s)),
            ("role", json!(role_name(role))),
        ];
        if dest.is_box() {
            match self.box_pose(&it, dest) {
                Some(pose) => {
                    d.push(("position_mm", json!(pose.position_mm)));
                    d.push(("rotation", json!(pose.rotation)));
                    d.push(("up_axis", json!(pose.up_axis)));
                    self.placed_in_box.entry(dest).or_default().push(pose);
                }
                None => d.push(("placement", json!("infeasible"))),
            }
        }
        let c = self.scene.get_mut(dest).expect("destination container");
        if c.drop_item(&it, &mut self.rng).is_err() {
            log::warn!("{item} does not fit {dest}; stacked at the center");
            c.stack_centered(&it);
        }
        self.container_changed(dest);
        let a = self.active[arm.index()].as_mut().expect("active");
        a.carrying = false;
        let home_t = a.arrival(WaypointRole::Home);
        self.record(Some(arm), ActionKind::Place, Some(&item), d);
        let reached_goal = match self.task_kind {
            TaskKind::Stow => dest.is_storage_bin(),
            TaskKind::Pick => self.box_of.get(&item) == Some(&dest),
        };
        if reached_goal {
            self.remaining_goal.remove(&item);
        }
        self.queue.push(home_t, EventKind::Home(arm));
    }

    fn box_pose(&self, item: &Item, dest: ContainerKind) -> Option<PlacementPose> {
        let dims = self.ws.container(dest)?.inner_dims_mm;
        let future_c: Vec<Item> = self
            .remaining_goal
            .iter()
            .filter(|id| *id != &item.id && self.box_of.get(*id) == Some(&dest))
            .take(self.cfg.placement_lookahead)
            .map(|id| self.items[id].clone())
            .collect();
        let problem = PlacementProblem {
            box_dims_mm: dims,
            placed_a: self.placed_in_box.get(&dest).cloned().unwrap_or_default(),
            pending_b: vec![item.clone()],
            future_c,
        };
        match plan_placement(&problem) {
            Ok(plan) => plan.poses.into_iter().next(),
            Err(e) => {
                log::debug!("placement of {} into {dest}: {e}", item.id);
                None
            }
        }
    }

    fn on_home(&mut self, arm: Arm) {
        let a = self.active[arm.index()].take().expect("active");
        self.record(
            Some(arm),
            ActionKind::Idle,
            Some(&a.task.item_id),
            vec![
                ("role", json!(role_name(a.task.role))),
                ("ended_by", json!(a.ended_by)),
                ("task_duration_s", json!(self.now - a.assigned_at)),
            ],
        );
    }

    /// Something was added to a container: its marked tasks are stale.
    fn container_changed(&mut self, kind: ContainerKind) {
        self.dirty.insert(kind);
        if let Some(ts) = self.state.marked.remove(&kind) {
            for t in ts {
                self.stow_arm.remove(&t.item_id);
            }
        }
    }

    fn relevant(&self, kind: ContainerKind) -> bool {
        let Some(c) = self.scene.get(kind) else {
            return false;
        };
        match self.task_kind {
            TaskKind::Stow => kind == ContainerKind::Tote && !c.items.is_empty(),
            TaskKind::Pick => {
                kind.is_storage_bin()
                    && c.items
                        .iter()
                        .any(|i| self.remaining_goal.contains(&i.item_id))
            }
        }
    }

    fn maybe_perceive(&mut self) {
        let paths = self.arm_paths();
        let mut eligible: Vec<ContainerKind> = self
            .dirty
            .iter()
            .copied()
            .filter(|&k| self.relevant(k) && !self.perceiving.contains_key(&k))
            .filter(|&k| {
                self.ws
                    .container(k)
                    .is_some_and(|c| needs_perception(&self.state, c, &paths))
            })
            .collect();
        // least recently perceived first
        eligible.sort_by(|a, b| {
            let ta = self
                .last_perceived
                .get(a)
                .copied()
                .unwrap_or(f64::NEG_INFINITY);
            let tb = self
                .last_perceived
                .get(b)
                .copied()
                .unwrap_or(f64::NEG_INFINITY);
            ta.total_cmp(&tb).then(a.cmp(b))
        });
        for kind in eligible {
            self.perceive(kind);
        }
        self.schedule_wake();
    }

    /// Wakes the planner when the last arm path blocking a container that
    /// waits for perception has moved off it.
    fn schedule_wake(&mut self) {
        let blocked: Vec<ContainerKind> = self
            .dirty
            .iter()
            .copied()
            .filter(|&k| {
                self.relevant(k) && !self.state.has_marked(k) && !self.perceiving.contains_key(&k)
            })
            .collect();
        let mut wake: Option<f64> = None;
        for k in blocked {
            let Some(c) = self.ws.container(k) else {
                continue;
            };
            let mut clear = self.now;
            for a in self.active.iter().flatten() {
                if polyline_over(c, &a.motion.remaining(self.now)) {
                    clear = clear.max(clear_time(&a.motion, c, self.now));
                }
            }
            if clear > self.now {
                wake = Some(wake.map_or(clear, |w: f64| w.min(clear)));
            }
        }
        if let Some(t) = wake {
            self.request_wake(t);
        }
    }

    fn request_wake(&mut self, t: f64) {
        if self.wake_at.is_none_or(|w| t < w) {
            self.wake_at = Some(t);
            self.queue.push(t, EventKind::Wake);
        }
    }

    /// The other arm's remaining path only shrinks, so its clearance to a
    /// fixed candidate path only grows: bisect for the first moment any
    /// candidate passes the gate.
    fn wake_when_gate_clears(&mut self, free: Arm, other: Arm) {
        let Some(busy) = self.active[other.index()].as_ref() else {
            return;
        };
        let home = self.ws.home(free);
        let paths: Vec<Vec<Point2>> = self
            .state
            .candidates()
            .into_iter()
            .filter(|c| {
                [c.source, c.place_container]
                    .iter()
                    .all(|&k| self.ws.container(k).is_some_and(|c| c.reachable(free)))
            })
            .map(|c| c.instantiate(free, home, home).points())
            .collect();
        if paths.is_empty() {
            return;
        }
        let threshold = self.ws.collision_threshold_mm;
        let clear = |t: f64| {
            let rest = busy.motion.remaining(t);
            paths.iter().any(|p| tasks_compatible(p, &rest, threshold))
        };
        let end = *busy.motion.arrive.last().expect("non-empty motion");
        if !clear(end) {
            // blocked until the other arm is home and idle
            return;
        }
        let (mut lo, mut hi) = (self.now, end);
        while hi - lo > 1e-3 {
            let mid = 0.5 * (lo + hi);
            if clear(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.request_wake(hi);
    }

    fn perceive(&mut self, kind: ContainerKind) {
        self.dirty.remove(&kind);
        self.last_perceived.insert(kind, self.now);
        let latency = self.cfg.perception_latency_s.for_task(self.task_kind);
        let rendered = render(
            self.scene.get(kind).expect("container"),
            self.cfg.map_resolution_mm_per_px,
        );
        let dag = match resolve(
            &rendered.maps,
            &rendered.detections,
            &self.class_names,
            &GraphParams::default(),
        ) {
            Ok(r) => r.fas.dag,
            Err(e) => {
                log::warn!("clutter graph for {kind}: {e}; ranking without occlusion");
                let mut g = ClutterGraph::new();
                for d in &rendered.detections {
                    g.add_vertex(
                        d.item_id.clone(),
                        self.class_names[&d.item_id].clone(),
                        d.confidence,
                    );
                }
                g
            }
        };
        let (tasks, stow_arms) = match self.task_kind {
            TaskKind::Stow => self.stow_tasks(kind, &rendered.maps, &rendered.detections, &dag),
            TaskKind::Pick => (
                self.pick_tasks(kind, &rendered.maps, &rendered.detections, &dag),
                BTreeMap::new(),
            ),
        };
        let marked: Vec<Value> = tasks
            .iter()
            .map(|t| json!({"item": t.item_id, "role": role_name(t.role), "place": t.place_container}))
            .collect();
        self.record(
            None,
            ActionKind::Perceive,
            None,
            vec![
                ("container", json!(kind)),
                ("duration_s", json!(latency)),
                ("detections", json!(rendered.detections.len())),
                ("dag_edges", json!(dag.edges.len())),
                ("marked", json!(marked)),
            ],
        );
        self.perceiving
            .insert(kind, PendingPerception { tasks, stow_arms });
        self.queue
            .push(self.now + latency, EventKind::PerceptionDone(kind));
    }

    fn on_perception_done(&mut self, kind: ContainerKind) {
        let p = self.perceiving.remove(&kind).expect("perception pending");
        if self.dirty.contains(&kind) {
            // changed while being perceived
            return;
        }
        let tasks: Vec<MarkedTask> = p
            .tasks
            .into_iter()
            .filter(|t| self.scene.get(kind).is_some_and(|c| c.contains(&t.item_id)))
            .collect();
        if self.task_kind == TaskKind::Stow {
            self.state.on_perception();
            self.stow_arm = p.stow_arms;
        }
        self.state
            .mark(kind, tasks)
            .expect("at most two targets per container");
    }

    fn stow_tasks(
        &mut self,
        kind: ContainerKind,
        maps: &crate::model::SceneMaps,
        dets: &[Detection],
        dag: &ClutterGraph,
    ) -> (Vec<MarkedTask>, BTreeMap<ItemId, Arm>) {
        let cands = match rank_stow_detections(dets, dag) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("stow ranking failed: {e}");
                return (Vec::new(), BTreeMap::new());
            }
        };
        // arms that are free, or will be home first, come first
        let mut arms = self.arms.clone();
        arms.sort_by(|a, b| {
            let free_at = |arm: &Arm| {
                self.active[arm.index()]
                    .as_ref()
                    .map_or(f64::NEG_INFINITY, |t| {
                        *t.motion.arrive.last().expect("non-empty")
                    })
            };
            free_at(a).total_cmp(&free_at(b)).then(a.cmp(b))
        });
        let picks = select_stow_pair(&cands, self.cfg.min_separation_mm, &arms, &mut self.rng);
        let source = self.ws.container(kind).expect("tote").clone();
        let mut tasks = Vec::new();
        let mut by_arm = BTreeMap::new();
        for s in picks {
            let bin = self
                .ws
                .container(s.arm.stow_bin())
                .expect("storage bin")
                .clone();
            let item = self.items[s.candidate.item_id()].clone();
            let gk = choose_grasp_kind(&item, &mut self.rng);
            let place = PlaceTarget {
                container: bin.kind,
                point: bin.origin_mm,
                pose: None,
                needs_rotation: false,
            };
            match mint_task(
                &s.candidate,
                &item,
                TaskRole::Stow,
                &source,
                maps,
                gk,
                place,
            ) {
                Ok(t) => {
                    by_arm.insert(t.item_id.clone(), s.arm);
                    tasks.push(t);
                }
                Err(e) => log::debug!("no stow task for {}: {e}", item.id),
            }
        }
        (tasks, by_arm)
    }

    fn pick_tasks(
        &mut self,
        kind: ContainerKind,
        maps: &crate::model::SceneMaps,
        dets: &[Detection],
        dag: &ClutterGraph,
    ) -> Vec<MarkedTask> {
        let source = self.ws.container(kind).expect("bin").clone();
        let here = self.scene.get(kind).expect("bin");
        let seen: BTreeSet<&ItemId> = dets.iter().map(|d| &d.item_id).collect();
        // remembered positions of order items that are currently hidden
        let hints: Vec<Point2> = self
            .remaining_goal
            .iter()
            .filter(|id| here.contains(id) && !seen.contains(id))
            .flat_map(|id| here.footprint_points(id))
            .collect();
        let mut choices =
            match generate_pick_tasks(&self.state, dets, dag, &self.remaining_goal, &hints) {
                Ok(c) => c,
                Err(e) => {
                    log::warn!("pick task generation failed: {e}");
                    Vec::new()
                }
            };
        if choices.is_empty() && self.relevant(kind) {
            // every order item is hidden and no single item covers one:
            // clear the least occluded non-target
            if let Ok(ranked) = rank_pick_detections(dets, dag, &self.state.fail_counters) {
                let mut movers: Vec<RankedDetection> = ranked
                    .into_iter()
                    .filter(|r| !self.remaining_goal.contains(r.item_id()))
                    .collect();
                movers.sort_by(|a, b| {
                    a.key
                        .occluders
                        .cmp(&b.key.occluders)
                        .then_with(|| a.key.cmp(&b.key))
                });
                choices.extend(movers.into_iter().take(1).map(|detection| PickChoice {
                    detection,
                    role: TaskRole::MoveAway,
                }));
            }
        }
        let other_bin = if kind == ContainerKind::StorageBinLeft {
            ContainerKind::StorageBinRight
        } else {
            ContainerKind::StorageBinLeft
        };
        let mut tasks = Vec::new();
        for c in choices {
            let item = self.items[c.detection.item_id()].clone();
            let place = match c.role {
                TaskRole::PickTarget => {
                    let dest = self.box_of[&item.id];
                    let b = self.ws.container(dest).expect("box").clone();
                    let pose = self.box_pose(&item, dest);
                    let point = match &pose {
                        Some(p) => {
                            let (x, y) = p.center_xy();
                            b.footprint_min() + Point2::new(x, y)
                        }
                        None => b.origin_mm,
                    };
                    let needs_rotation = pose
                        .as_ref()
                        .is_some_and(|p| p.up_axis != 2 || p.rotation == Rotation::Deg90);
                    PlaceTarget {
                        container: dest,
                        point,
                        pose,
                        needs_rotation,
                    }
                }
                _ => {
                    let b = self.ws.container(other_bin).expect("bin");
                    PlaceTarget {
                        container: other_bin,
                        point: b.origin_mm,
                        pose: None,
                        needs_rotation: false,
                    }
                }
            };
            let gk = choose_grasp_kind(&item, &mut self.rng);
            match mint_task(&c.detection, &item, c.role, &source, maps, gk, place) {
                Ok(t) => tasks.push(t),
                Err(e) => log::debug!("no task for {}: {e}", item.id),
            }
        }
        tasks
    }
}
