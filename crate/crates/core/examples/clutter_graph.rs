//! Renders the initial left storage bin of the bundled pick scenario,
//! builds its occlusion graph, resolves cycles and prints the DAG as dot
//! together with each item's occluder count.
//!
//! cargo run --example clutter_graph -- [seed] | dot -Tsvg > graph.svg

use std::collections::BTreeMap;

use binpick::clutter::{occluder_count, resolve, GraphParams};
use binpick::model::{load_scenario, ContainerKind};
use binpick::sim::{initial_scene, render};

fn main() -> binpick::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/arc_final.json");
    let scenario = load_scenario(&std::fs::read_to_string(path)?)?;
    let scene = initial_scene(&scenario, &scenario.workspace, seed)?;
    let bin = scene.get(ContainerKind::StorageBinLeft).expect("bin");
    let r = render(bin, 2.0);
    let names: BTreeMap<_, _> = scenario
        .items
        .iter()
        .map(|i| (i.id.clone(), i.class_name.clone()))
        .collect();
    let resolved = resolve(&r.maps, &r.detections, &names, &GraphParams::default())?;
    print!("{}", resolved.dag().to_dot());
    for d in &r.detections {
        eprintln!(
            "{:<20} confidence {:.2}  occluders {}",
            d.item_id,
            d.confidence,
            occluder_count(resolved.dag(), &d.item_id)?
        );
    }
    eprintln!(
        "removed {} edges, evidence {}",
        resolved.fas.removed.len(),
        resolved.fas.removed_evidence()
    );
    Ok(())
}
