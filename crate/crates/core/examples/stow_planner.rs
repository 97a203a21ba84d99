//! One stow planning cycle on the bundled tote: rank detections, keep the
//! confident uncovered ones and pick a well separated pair for the arms.
//!
//! cargo run --example stow_planner -- [seed]

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use binpick::clutter::{resolve, GraphParams};
use binpick::coordination::{rank_stow_detections, select_stow_pair, DEFAULT_MIN_SEPARATION_MM};
use binpick::model::{load_scenario, Arm, ContainerKind};
use binpick::sim::{initial_scene, render};

fn main() -> binpick::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/arc_final_stow.json");
    let scenario = load_scenario(&std::fs::read_to_string(path)?)?;
    let scene = initial_scene(&scenario, &scenario.workspace, seed)?;
    let r = render(scene.get(ContainerKind::Tote).expect("tote"), 2.0);
    let names: BTreeMap<_, _> = scenario
        .items
        .iter()
        .map(|i| (i.id.clone(), i.class_name.clone()))
        .collect();
    let dag = resolve(&r.maps, &r.detections, &names, &GraphParams::default())?
        .fas
        .dag;
    let cands = rank_stow_detections(&r.detections, &dag)?;
    println!(
        "{} detections, {} candidates",
        r.detections.len(),
        cands.len()
    );
    for c in &cands {
        println!(
            "  {:<20} confidence {:.2}  occluders {}",
            c.item_id(),
            c.key.confidence,
            c.key.occluders
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for a in select_stow_pair(&cands, DEFAULT_MIN_SEPARATION_MM, &Arm::BOTH, &mut rng) {
        println!(
            "{} arm stows {} into {}",
            a.arm,
            a.candidate.item_id(),
            a.arm.stow_bin()
        );
    }
    Ok(())
}
