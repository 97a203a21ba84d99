//! Marks pick tasks for both storage bins of the bundled scenario, then
//! hands them to the arms one at a time under the collision gate.
//!
//! cargo run --example pick_coordination -- [seed]

use std::collections::{BTreeMap, BTreeSet};

use binpick::clutter::{resolve, GraphParams};
use binpick::coordination::{
    assign_task, generate_pick_tasks, mint_task, PlaceTarget, PlannerState,
};
use binpick::grasping::GraspKind;
use binpick::model::{load_scenario, Arm, ContainerKind};
use binpick::sim::{initial_scene, render};

fn main() -> binpick::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/arc_final.json");
    let scenario = load_scenario(&std::fs::read_to_string(path)?)?;
    let ws = &scenario.workspace;
    let scene = initial_scene(&scenario, ws, seed)?;
    let names: BTreeMap<_, _> = scenario
        .items
        .iter()
        .map(|i| (i.id.clone(), i.class_name.clone()))
        .collect();
    let order: BTreeSet<_> = scenario.order.iter().cloned().collect();
    let boxes = [
        ContainerKind::BoxLeftCorner,
        ContainerKind::BoxCenter,
        ContainerKind::BoxRightCorner,
    ];
    let box_of: BTreeMap<_, _> = scenario
        .order
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), boxes[i % 3]))
        .collect();

    let mut state = PlannerState::default();
    for bin in [
        ContainerKind::StorageBinLeft,
        ContainerKind::StorageBinRight,
    ] {
        let r = render(scene.get(bin).expect("bin"), 2.0);
        let dag = resolve(&r.maps, &r.detections, &names, &GraphParams::default())?
            .fas
            .dag;
        let choices = generate_pick_tasks(&state, &r.detections, &dag, &order, &[])?;
        let source = ws.container(bin).expect("bin");
        let mut tasks = Vec::new();
        for ch in choices {
            let item = scenario.item(ch.detection.item_id()).expect("item");
            let dest = box_of
                .get(&item.id)
                .copied()
                .unwrap_or(ContainerKind::StorageBinRight);
            let place = PlaceTarget {
                container: dest,
                point: ws.container(dest).expect("box").origin_mm,
                pose: None,
                needs_rotation: false,
            };
            let t = mint_task(
                &ch.detection,
                item,
                ch.role,
                source,
                &r.maps,
                GraspKind::Suction,
                place,
            )?;
            println!(
                "{bin}: marked {} ({:?}) -> {}",
                t.item_id, t.role, t.place_container
            );
            tasks.push(t);
        }
        state.mark(bin, tasks)?;
    }

    // left arm takes a task first, then the right arm must clear its path
    let mut other = None;
    for arm in Arm::BOTH {
        let cands = state.candidates();
        match assign_task(ws, arm, ws.home(arm), &cands, other.as_deref()) {
            Some(a) => {
                println!(
                    "{arm} arm: {} from {} to {}, clearance {}",
                    a.task.item_id,
                    a.task.source,
                    a.task.place_container,
                    a.clearance_mm
                        .map_or("n/a".into(), |d| format!("{d:.0} mm"))
                );
                let id = a.task.item_id.clone();
                other = Some(a.task.points());
                state.take_marked(&id);
            }
            None => println!("{arm} arm: no task clears the other arm's path"),
        }
    }
    Ok(())
}
