//! Domain types shared by the planners and the simulator, plus scenario
//! file ingestion.
//!
//! Units are millimeters, grams and seconds throughout.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Polygon};

/// Fail count above which the planners stop trusting the best-ranked item.
pub const FAIL_COUNT_CAP: u32 = 3;

pub const DEFAULT_COLLISION_THRESHOLD_MM: f64 = 350.0;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub String);

impl ItemId {
    pub fn new(s: impl Into<String>) -> Self {
        ItemId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        ItemId(s.to_owned())
    }
}

impl From<String> for ItemId {
    fn from(s: String) -> Self {
        ItemId(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub id: ItemId,
    pub class_name: String,
    pub mass_g: f64,
    /// Length, width, height.
    pub bbox_mm: [f64; 3],
    pub suction_probability: f64,
    #[serde(default)]
    pub is_target: bool,
}

impl Item {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass_g > 0.0) || !self.mass_g.is_finite() {
            return Err(Error::validation(
                "Item.mass_g",
                format!("item {} has mass {} g, must be > 0", self.id, self.mass_g),
            ));
        }
        if self.bbox_mm.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::validation(
                "Item.bbox_mm",
                format!(
                    "item {} has bbox {:?}, all dimensions must be > 0",
                    self.id, self.bbox_mm
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.suction_probability) {
            return Err(Error::validation(
                "Item.suction_probability",
                format!(
                    "item {} has suction probability {}, must lie in [0, 1]",
                    self.id, self.suction_probability
                ),
            ));
        }
        Ok(())
    }
}

/// One perceived item: its visible contour and how sure perception is.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub item_id: ItemId,
    pub contour: Polygon,
    pub confidence: f64,
    #[serde(default)]
    pub fail_count: u32,
}

/// Co-registered label and height maps of one container, row-major.
///
/// Pixel `(col, row)` covers the square starting at
/// `origin_mm + (col, row) * resolution_mm_per_px`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMaps {
    pub origin_mm: Point2,
    pub resolution_mm_per_px: f64,
    pub width_px: usize,
    pub height_px: usize,
    pub label: Vec<Option<ItemId>>,
    pub depth: Vec<f64>,
}

impl SceneMaps {
    pub fn empty(
        origin_mm: Point2,
        resolution_mm_per_px: f64,
        width_px: usize,
        height_px: usize,
    ) -> Self {
        let n = width_px * height_px;
        SceneMaps {
            origin_mm,
            resolution_mm_per_px,
            width_px,
            height_px,
            label: vec![None; n],
            depth: vec![0.0; n],
        }
    }

    fn index(&self, col: usize, row: usize) -> usize {
        row * self.width_px + col
    }

    pub fn label_at(&self, col: usize, row: usize) -> Option<&ItemId> {
        self.label[self.index(col, row)].as_ref()
    }

    pub fn depth_at(&self, col: usize, row: usize) -> f64 {
        self.depth[self.index(col, row)]
    }

    pub fn set(&mut self, col: usize, row: usize, label: Option<ItemId>, depth: f64) {
        let i = self.index(col, row);
        self.label[i] = label;
        self.depth[i] = depth;
    }

    pub fn in_bounds(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && (col as usize) < self.width_px && (row as usize) < self.height_px
    }

    pub fn pixel_center(&self, col: usize, row: usize) -> Point2 {
        let r = self.resolution_mm_per_px;
        self.origin_mm + Point2::new((col as f64 + 0.5) * r, (row as f64 + 0.5) * r)
    }

    /// Continuous pixel coordinates of a workspace point (pixel centers
    /// land on integers).
    pub fn to_pixel_coords(&self, p: Point2) -> (f64, f64) {
        let q = p - self.origin_mm;
        (
            q.x / self.resolution_mm_per_px - 0.5,
            q.y / self.resolution_mm_per_px - 0.5,
        )
    }

    /// Pixel containing a workspace point, if inside the map.
    pub fn pixel_of(&self, p: Point2) -> Option<(usize, usize)> {
        let (cx, cy) = self.to_pixel_coords(p);
        let (c, r) = ((cx + 0.5).floor() as i64, (cy + 0.5).floor() as i64);
        self.in_bounds(c, r).then_some((c as usize, r as usize))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution_mm_per_px > 0.0) {
            return Err(Error::validation(
                "SceneMaps.resolution_mm_per_px",
                "must be > 0",
            ));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::validation(
                "SceneMaps.width_px",
                "map dimensions must be positive",
            ));
        }
        let n = self.width_px * self.height_px;
        if self.label.len() != n || self.depth.len() != n {
            return Err(Error::validation(
                "SceneMaps.label",
                format!(
                    "label ({}) and depth ({}) grids must both have {n} cells",
                    self.label.len(),
                    self.depth.len()
                ),
            ));
        }
        if self
            .label
            .iter()
            .zip(&self.depth)
            .any(|(l, &d)| l.is_some() && !(d >= 0.0))
        {
            return Err(Error::validation(
                "SceneMaps.depth",
                "labeled pixels need depth >= 0",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Left,
    Right,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Left, Arm::Right];

    pub fn index(self) -> usize {
        match self {
            Arm::Left => 0,
            Arm::Right => 1,
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Left => Arm::Right,
            Arm::Right => Arm::Left,
        }
    }

    /// The cardboard box only this arm can reach.
    pub fn corner_box(self) -> ContainerKind {
        match self {
            Arm::Left => ContainerKind::BoxLeftCorner,
            Arm::Right => ContainerKind::BoxRightCorner,
        }
    }

    /// Storage bin this arm stows into.
    pub fn stow_bin(self) -> ContainerKind {
        match self {
            Arm::Left => ContainerKind::StorageBinLeft,
            Arm::Right => ContainerKind::StorageBinRight,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Left => "left",
            Arm::Right => "right",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainerKind {
    StorageBinLeft,
    StorageBinRight,
    Tote,
    BoxCenter,
    BoxLeftCorner,
    BoxRightCorner,
}

impl ContainerKind {
    pub fn is_corner_box(self) -> bool {
        matches!(
            self,
            ContainerKind::BoxLeftCorner | ContainerKind::BoxRightCorner
        )
    }

    pub fn is_box(self) -> bool {
        matches!(
            self,
            ContainerKind::BoxCenter | ContainerKind::BoxLeftCorner | ContainerKind::BoxRightCorner
        )
    }

    pub fn is_storage_bin(self) -> bool {
        matches!(
            self,
            ContainerKind::StorageBinLeft | ContainerKind::StorageBinRight
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ContainerKind::StorageBinLeft => "storage_bin_left",
            ContainerKind::StorageBinRight => "storage_bin_right",
            ContainerKind::Tote => "tote",
            ContainerKind::BoxCenter => "box_center",
            ContainerKind::BoxLeftCorner => "box_left_corner",
            ContainerKind::BoxRightCorner => "box_right_corner",
        }
    }
}

impl fmt::Display for ContainerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Container {
    pub kind: ContainerKind,
    /// Center of the footprint.
    pub origin_mm: Point2,
    /// Length (x), width (y), height.
    pub inner_dims_mm: [f64; 3],
    pub reachable_by: Vec<Arm>,
}

impl Container {
    pub fn footprint_min(&self) -> Point2 {
        self.origin_mm - Point2::new(self.inner_dims_mm[0] / 2.0, self.inner_dims_mm[1] / 2.0)
    }

    pub fn footprint_max(&self) -> Point2 {
        self.origin_mm + Point2::new(self.inner_dims_mm[0] / 2.0, self.inner_dims_mm[1] / 2.0)
    }

    pub fn contains(&self, p: Point2) -> bool {
        let (lo, hi) = (self.footprint_min(), self.footprint_max());
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    pub fn reachable(&self, arm: Arm) -> bool {
        self.reachable_by.contains(&arm)
    }

    fn overlaps(&self, other: &Container) -> bool {
        let (a0, a1) = (self.footprint_min(), self.footprint_max());
        let (b0, b1) = (other.footprint_min(), other.footprint_max());
        a0.x < b1.x && b0.x < a1.x && a0.y < b1.y && b0.y < a1.y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Pick,
    Stow,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Pick => "pick",
            TaskKind::Stow => "stow",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    pub containers: Vec<Container>,
    pub arm_bases: [Point2; 2],
    pub arm_home_poses: [Point2; 2],
    #[serde(default = "default_collision_threshold")]
    pub collision_threshold_mm: f64,
}

fn default_collision_threshold() -> f64 {
    DEFAULT_COLLISION_THRESHOLD_MM
}

fn container(kind: ContainerKind, center: (f64, f64), dims: [f64; 3], arms: &[Arm]) -> Container {
    Container {
        kind,
        origin_mm: Point2::new(center.0, center.1),
        inner_dims_mm: dims,
        reachable_by: arms.to_vec(),
    }
}

impl Workspace {
    /// Default two-arm layout: storage bins left and right of a shared
    /// center container, one exclusive cardboard box per arm for picking.
    pub fn default_for(task: TaskKind) -> Workspace {
        let both = [Arm::Left, Arm::Right];
        let bin = [340.0, 450.0, 200.0];
        let mut containers = vec![
            container(ContainerKind::StorageBinLeft, (-300.0, 350.0), bin, &both),
            container(ContainerKind::StorageBinRight, (300.0, 350.0), bin, &both),
        ];
        match task {
            TaskKind::Stow => {
                containers.push(container(
                    ContainerKind::Tote,
                    (0.0, 350.0),
                    [240.0, 450.0, 200.0],
                    &both,
                ));
            }
            TaskKind::Pick => {
                let corner = [300.0, 250.0, 150.0];
                containers.push(container(
                    ContainerKind::BoxCenter,
                    (0.0, 350.0),
                    [240.0, 350.0, 150.0],
                    &both,
                ));
                containers.push(container(
                    ContainerKind::BoxLeftCorner,
                    (-650.0, -250.0),
                    corner,
                    &[Arm::Left],
                ));
                containers.push(container(
                    ContainerKind::BoxRightCorner,
                    (650.0, -250.0),
                    corner,
                    &[Arm::Right],
                ));
            }
        }
        Workspace {
            containers,
            arm_bases: [Point2::new(-600.0, 0.0), Point2::new(600.0, 0.0)],
            arm_home_poses: [Point2::new(-550.0, 150.0), Point2::new(550.0, 150.0)],
            collision_threshold_mm: DEFAULT_COLLISION_THRESHOLD_MM,
        }
    }

    pub fn container(&self, kind: ContainerKind) -> Option<&Container> {
        self.containers.iter().find(|c| c.kind == kind)
    }

    pub fn home(&self, arm: Arm) -> Point2 {
        self.arm_home_poses[arm.index()]
    }

    /// Layout for a single-arm run: the other arm's corner box is moved
    /// next to `arm`, mirroring the arm's own corner box about the base by
    /// a quarter turn toward the workspace center, and handed to `arm`.
    pub fn single_arm(&self, arm: Arm) -> Workspace {
        let mut ws = self.clone();
        let base = self.arm_bases[arm.index()];
        let own = self.container(arm.corner_box()).map(|c| c.origin_mm);
        for c in &mut ws.containers {
            if c.kind == arm.other().corner_box() {
                if let Some(own) = own {
                    let off = own - base;
                    let ccw = base + Point2::new(-off.y, off.x);
                    let cw = base + Point2::new(off.y, -off.x);
                    c.origin_mm = if ccw.x.abs() <= cw.x.abs() { ccw } else { cw };
                }
                c.reachable_by = vec![arm];
            } else {
                c.reachable_by.retain(|&a| a == arm);
            }
        }
        ws
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.collision_threshold_mm > 0.0) {
            return Err(Error::validation(
                "Workspace.collision_threshold_mm",
                "must be > 0",
            ));
        }
        let mut kinds = BTreeSet::new();
        for c in &self.containers {
            if !kinds.insert(c.kind) {
                return Err(Error::validation(
                    "Workspace.containers",
                    format!("container {} listed twice", c.kind),
                ));
            }
            if c.inner_dims_mm.iter().any(|&d| !(d > 0.0)) {
                return Err(Error::validation(
                    "Container.inner_dims_mm",
                    format!("container {} has non-positive dimensions", c.kind),
                ));
            }
            if c.reachable_by.is_empty() {
                return Err(Error::validation(
                    "Container.reachable_by",
                    format!("container {} is not reachable by any arm", c.kind),
                ));
            }
            if c.kind.is_corner_box() && c.reachable_by.len() != 1 {
                return Err(Error::validation(
                    "Container.reachable_by",
                    format!("corner box {} must be reachable by exactly one arm", c.kind),
                ));
            }
        }
        for (i, a) in self.containers.iter().enumerate() {
            for b in &self.containers[i + 1..] {
                if a.overlaps(b) {
                    return Err(Error::validation(
                        "Container.origin_mm",
                        format!("footprints of {} and {} overlap", a.kind, b.kind),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub workspace: Workspace,
    pub items: Vec<Item>,
    pub task: TaskKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub order: Vec<ItemId>,
}

impl Scenario {
    pub fn item(&self, id: &ItemId) -> Option<&Item> {
        self.items.iter().find(|i| &i.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        self.workspace.validate()?;
        let mut ids = BTreeSet::new();
        for item in &self.items {
            item.validate()?;
            if !ids.insert(&item.id) {
                return Err(Error::validation(
                    "Item.id",
                    format!("duplicate item id {}", item.id),
                ));
            }
        }
        let required: &[ContainerKind] = match self.task {
            TaskKind::Stow => &[
                ContainerKind::Tote,
                ContainerKind::StorageBinLeft,
                ContainerKind::StorageBinRight,
            ],
            TaskKind::Pick => &[
                ContainerKind::StorageBinLeft,
                ContainerKind::StorageBinRight,
            ],
        };
        for kind in required {
            if self.workspace.container(*kind).is_none() {
                return Err(Error::validation(
                    "Workspace.containers",
                    format!("{} task needs a {kind}", self.task),
                ));
            }
        }
        match self.task {
            TaskKind::Stow => {
                if !self.order.is_empty() {
                    return Err(Error::validation("order", "stow scenarios take no order"));
                }
                if let Some(item) = self.items.iter().find(|i| i.is_target) {
                    return Err(Error::validation(
                        "Item.is_target",
                        format!("item {} is marked as target in a stow scenario", item.id),
                    ));
                }
            }
            TaskKind::Pick => {
                if !self.workspace.containers.iter().any(|c| c.kind.is_box()) {
                    return Err(Error::validation(
                        "Workspace.containers",
                        "pick task needs a cardboard box",
                    ));
                }
                let mut seen = BTreeSet::new();
                for id in &self.order {
                    if !ids.contains(id) {
                        return Err(Error::validation("order", format!("unknown item {id}")));
                    }
                    if !seen.insert(id) {
                        return Err(Error::validation(
                            "order",
                            format!("item {id} ordered twice"),
                        ));
                    }
                }
                for item in &self.items {
                    if item.is_target != seen.contains(&item.id) {
                        return Err(Error::validation(
                            "Item.is_target",
                            format!("item {} is_target disagrees with the order", item.id),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Parses and validates a scenario file.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn save_scenario(s: &Scenario) -> String {
    s.to_json()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, mass: f64) -> Item {
        Item {
            id: id.into(),
            class_name: "widget".into(),
            mass_g: mass,
            bbox_mm: [100.0, 80.0, 40.0],
            suction_probability: 0.8,
            is_target: false,
        }
    }

    fn minimal() -> Scenario {
        Scenario {
            workspace: Workspace::default_for(TaskKind::Stow),
            items: vec![item("a", 120.0), item("b", 300.0)],
            task: TaskKind::Stow,
            order: vec![],
        }
    }

    #[test]
    fn minimal_scenario_round_trips() {
        let s = minimal();
        let loaded = load_scenario(&save_scenario(&s)).unwrap();
        assert_eq!(loaded, s);
        assert_eq!(loaded.items.len(), 2);
    }

    #[test]
    fn zero_mass_names_the_field() {
        let mut s = minimal();
        s.items[1].mass_g = 0.0;
        let err = load_scenario(&s.to_json()).unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "Item.mass_g"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = load_scenario("{\n  \"workspace\": 3\n}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let err = load_scenario("{\"items\": []}").unwrap_err();
        assert!(err.to_string().contains("workspace"), "{err}");
    }

    #[test]
    fn invariant_violations_are_rejected() {
        let mut s = minimal();
        s.items[0].suction_probability = 1.5;
        assert!(load_scenario(&s.to_json()).is_err());

        let mut s = minimal();
        s.items[0].bbox_mm[2] = -1.0;
        assert!(load_scenario(&s.to_json()).is_err());

        let mut s = minimal();
        s.workspace.containers[2].origin_mm = Point2::new(-250.0, 350.0);
        assert!(matches!(
            load_scenario(&s.to_json()),
            Err(Error::Validation { .. })
        ));

        let mut s = minimal();
        s.items[1].id = "a".into();
        assert!(load_scenario(&s.to_json()).is_err());

        let mut s = minimal();
        s.order = vec!["a".into()];
        assert!(load_scenario(&s.to_json()).is_err());
    }

    #[test]
    fn pick_order_must_match_targets() {
        let mut s = minimal();
        s.task = TaskKind::Pick;
        s.workspace = Workspace::default_for(TaskKind::Pick);
        s.order = vec!["a".into()];
        assert!(load_scenario(&s.to_json()).is_err());
        s.items[0].is_target = true;
        load_scenario(&s.to_json()).unwrap();
        s.order.push("zz".into());
        assert!(load_scenario(&s.to_json()).is_err());
    }

    #[test]
    fn corner_boxes_need_one_arm() {
        let mut ws = Workspace::default_for(TaskKind::Pick);
        ws.validate().unwrap();
        for c in &mut ws.containers {
            if c.kind == ContainerKind::BoxLeftCorner {
                c.reachable_by = vec![Arm::Left, Arm::Right];
            }
        }
        assert!(ws.validate().is_err());
    }

    #[test]
    fn single_arm_layout_moves_the_far_box() {
        let ws = Workspace::default_for(TaskKind::Pick).single_arm(Arm::Left);
        ws.validate().unwrap();
        let moved = ws.container(ContainerKind::BoxRightCorner).unwrap();
        assert_eq!(moved.reachable_by, vec![Arm::Left]);
        let base = ws.arm_bases[0];
        let own = ws.container(ContainerKind::BoxLeftCorner).unwrap();
        let d_own = own.origin_mm.distance(base);
        assert!((moved.origin_mm.distance(base) - d_own).abs() < 1e-9);
        assert!(ws
            .containers
            .iter()
            .all(|c| c.reachable_by == vec![Arm::Left]));
    }

    #[test]
    fn maps_pixel_mapping() {
        let maps = SceneMaps::empty(Point2::new(-10.0, 20.0), 2.0, 4, 3);
        assert_eq!(maps.pixel_center(0, 0), Point2::new(-9.0, 21.0));
        assert_eq!(maps.pixel_of(Point2::new(-9.0, 21.0)), Some((0, 0)));
        assert_eq!(maps.pixel_of(Point2::new(-2.1, 25.9)), Some((3, 2)));
        assert_eq!(maps.pixel_of(Point2::new(-11.0, 21.0)), None);
        maps.validate().unwrap();
    }
}
