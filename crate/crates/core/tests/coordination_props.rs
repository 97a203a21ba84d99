mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use binpick::clutter::ClutterGraph;
use binpick::coordination::{
    assign_task, rank_pick_detections, tasks_compatible, MarkedTask, PlannerState, RankKey,
    TaskRole,
};
use binpick::geometry::{Point2, Polygon, Vec3};
use binpick::grasping::{GraspAnchor, GraspKind, GraspPose};
use binpick::model::{Arm, ContainerKind, Detection, ItemId, TaskKind, Workspace};

fn det(i: usize, conf: f64, fails: u32) -> Detection {
    Detection {
        item_id: format!("d{i}").into(),
        contour: Polygon::rectangle(Point2::new(i as f64 * 50.0, 0.0), 40.0, 40.0).unwrap(),
        confidence: conf,
        fail_count: fails,
    }
}

fn detections() -> impl Strategy<Value = (Vec<Detection>, Vec<(usize, usize)>)> {
    (2usize..8).prop_flat_map(|n| {
        (
            proptest::collection::vec((0u8..5, 0u32..5), n),
            proptest::collection::vec((0..n, 0..n), 0..n * 2),
        )
            .prop_map(move |(cf, edges)| {
                let dets = cf
                    .iter()
                    .enumerate()
                    .map(|(i, &(c, f))| det(i, c as f64 / 4.0, f))
                    .collect();
                // forward edges only: acyclic by construction
                let edges = edges.into_iter().filter(|(a, b)| a < b).collect();
                (dets, edges)
            })
    })
}

fn marked(item: &str, source: ContainerKind, place: ContainerKind, at: Point2) -> MarkedTask {
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

proptest! {
    #[test]
    fn pick_ranking_is_a_total_order((dets, edges) in detections()) {
        let mut g = ClutterGraph::new();
        for d in &dets {
            g.add_vertex(d.item_id.clone(), "x", d.confidence);
        }
        for (a, b) in edges {
            g.add_evidence(&dets[a].item_id, &dets[b].item_id, 1);
        }
        let fails: BTreeMap<ItemId, u32> = dets.iter().map(|d| (d.item_id.clone(), d.fail_count)).collect();
        let ranked = rank_pick_detections(&dets, &g, &fails).unwrap();
        let keys: Vec<_> = ranked.iter().map(|r| r.key.clone()).collect();
        for a in &keys {
            for b in &keys {
                prop_assert_eq!(a.cmp(b), b.cmp(a).reverse());
                for c in &keys {
                    if a <= b && b <= c {
                        prop_assert!(a <= c);
                    }
                }
            }
        }
        prop_assert!(keys.windows(2).all(|w| w[0] < w[1]));
        for w in keys.windows(2) {
            let (x, y) = (&w[0], &w[1]);
            prop_assert!(
                x.fail_count < y.fail_count
                    || (x.fail_count == y.fail_count && x.occluders < y.occluders)
                    || (x.fail_count == y.fail_count && x.occluders == y.occluders && x.confidence >= y.confidence)
            );
        }
    }

    #[test]
    fn corner_boxes_only_go_to_their_arm(
        picks in proptest::collection::vec((0usize..3, 0usize..2, -100.0f64..100.0, -100.0f64..100.0), 1..5),
        busy in proptest::option::of(0usize..3),
    ) {
        let ws = Workspace::default_for(TaskKind::Pick);
        let boxes = [ContainerKind::BoxLeftCorner, ContainerKind::BoxCenter, ContainerKind::BoxRightCorner];
        let bins = [ContainerKind::StorageBinLeft, ContainerKind::StorageBinRight];
        let tasks: Vec<MarkedTask> = picks
            .iter()
            .enumerate()
            .map(|(i, &(b, s, dx, dy))| {
                let src = ws.container(bins[s]).unwrap().origin_mm;
                marked(&format!("t{i}"), bins[s], boxes[b], Point2::new(src.x + dx, src.y + dy))
            })
            .collect();
        let refs: Vec<&MarkedTask> = tasks.iter().collect();
        let other: Option<Vec<Point2>> = busy.map(|b| {
            vec![ws.home(Arm::Right), ws.container(boxes[b]).unwrap().origin_mm]
        });
        for arm in Arm::BOTH {
            let o = if arm == Arm::Left { other.as_deref() } else { None };
            if let Some(a) = assign_task(&ws, arm, ws.home(arm), &refs, o) {
                let c = ws.container(a.task.place_container).unwrap();
                prop_assert!(c.reachable(arm));
                prop_assert!(a.task.place_container != arm.other().corner_box());
                if let Some(o) = o {
                    prop_assert!(tasks_compatible(&a.task.points(), o, ws.collision_threshold_mm));
                }
                // own corner box wins whenever some compatible task has one
                let own = arm.corner_box();
                if a.task.place_container != own {
                    for t in &tasks {
                        if t.place_container == own {
                            let inst = t.instantiate(arm, ws.home(arm), ws.home(arm));
                            let ok = o.is_none_or(|o| tasks_compatible(&inst.points(), o, ws.collision_threshold_mm));
                            prop_assert!(!ok);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn marked_target_cap_and_attempt_budget() {
    let mut s = PlannerState::default();
    let p = Point2::new(-300.0, 350.0);
    let bin = ContainerKind::StorageBinLeft;
    let t = |n: &str| marked(n, bin, ContainerKind::BoxCenter, p);
    assert!(s.mark(bin, vec![t("a"), t("b"), t("c")]).is_err());
    s.mark(bin, vec![t("a"), t("b")]).unwrap();
    assert_eq!(s.candidates().len(), 2);
    s.record_attempt().unwrap();
    s.record_attempt().unwrap();
    assert!(s.record_attempt().is_err());
    s.on_perception();
    s.record_attempt().unwrap();
}

#[test]
fn gate_threshold_is_strict() {
    let a = [Point2::new(0.0, 0.0), Point2::new(0.0, 100.0)];
    let b = [Point2::new(350.0, 0.0), Point2::new(350.0, 100.0)];
    assert!(!tasks_compatible(&a, &b, 350.0));
    assert!(tasks_compatible(&a, &b, 349.999));
}
