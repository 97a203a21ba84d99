//! Center-of-mass versus pole grasps for light and heavy items, and the
//! scale check that follows a grasp.
//!
//! cargo run --example grasp_selection

use binpick::geometry::{Point2, Polygon};
use binpick::grasping::{com_threshold, select_grasp_point, verify_weight, GraspGeometry};

fn main() -> binpick::Result<()> {
    let shapes = [
        (
            "rectangle",
            Polygon::rectangle(Point2::new(0., 0.), 120., 60.)?,
        ),
        (
            "notched",
            Polygon::new(
                [
                    (0., 0.),
                    (120., 0.),
                    (120., 60.),
                    (70., 60.),
                    (70., 45.),
                    (50., 45.),
                    (50., 60.),
                    (0., 60.),
                ]
                .iter()
                .map(|&(x, y)| Point2::new(x, y))
                .collect(),
            )?,
        ),
        (
            "L-shape",
            Polygon::new(
                [
                    (0., 0.),
                    (90., 0.),
                    (90., 30.),
                    (30., 30.),
                    (30., 90.),
                    (0., 90.),
                ]
                .iter()
                .map(|&(x, y)| Point2::new(x, y))
                .collect(),
            )?,
        ),
    ];
    for (name, contour) in &shapes {
        let g = GraspGeometry::of(contour)?;
        for mass in [150.0, 1200.0] {
            let (p, anchor) = select_grasp_point(contour, mass)?;
            println!(
                "{name:<9} {mass:>6} g  ratio {:.2} vs {:.1}  -> {anchor:?} at ({:.1}, {:.1})",
                g.ratio(),
                com_threshold(mass),
                p.x,
                p.y
            );
        }
    }
    for (expected, measured) in [(300.0, 302.0), (300.0, 340.0), (20.0, 24.0)] {
        println!(
            "expected {expected} g, measured {measured} g -> {:?}",
            verify_weight(expected, measured)
        );
    }
    Ok(())
}
