//! Plans where to put a new item into a partly filled shipping box while
//! keeping room for the items still to come.
//!
//! cargo run --example box_placement

use binpick::model::Item;
use binpick::placement::{plan_placement, PlacementProblem};

fn item(id: &str, dims: [f64; 3]) -> Item {
    Item {
        id: id.into(),
        class_name: id.into(),
        mass_g: 200.0,
        bbox_mm: dims,
        suction_probability: 0.5,
        is_target: true,
    }
}

fn main() -> binpick::Result<()> {
    let box_dims = [300.0, 200.0, 150.0];
    let mut placed = Vec::new();
    let order = [
        item("book", [220.0, 150.0, 30.0]),
        item("brush", [190.0, 30.0, 25.0]),
        item("tape", [110.0, 110.0, 50.0]),
        item("sponge", [120.0, 80.0, 40.0]),
    ];
    for (i, it) in order.iter().enumerate() {
        let plan = plan_placement(&PlacementProblem {
            box_dims_mm: box_dims,
            placed_a: placed.clone(),
            pending_b: vec![it.clone()],
            future_c: order[i + 1..].iter().take(2).cloned().collect(),
        })?;
        let pose = plan.poses[0].clone();
        println!(
            "{:<7} at ({:>5.1}, {:>5.1}, {:>5.1}) dims {:?} {:?}, stack height with lookahead {:.1} mm",
            it.id,
            pose.position_mm[0],
            pose.position_mm[1],
            pose.position_mm[2],
            pose.oriented_dims_mm,
            pose.rotation,
            plan.total_height_mm
        );
        placed.push(pose);
    }
    Ok(())
}
