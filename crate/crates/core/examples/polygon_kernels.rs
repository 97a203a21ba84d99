//! Area, centroid, signed contour distance and pole of inaccessibility of
//! an L-shaped contour, plus the segment distance used by the arm gate.
//!
//! cargo run --example polygon_kernels

use binpick::geometry::{
    area_and_centroid, distance_to_contour, pole_of_inaccessibility, polyline_min_distance, Point2,
    Polygon, DEFAULT_POLE_PRECISION_MM,
};

fn main() -> binpick::Result<()> {
    // 30 x 30 mm L, arms 10 mm thick
    let l = Polygon::new(
        [
            (0., 0.),
            (30., 0.),
            (30., 10.),
            (10., 10.),
            (10., 30.),
            (0., 30.),
        ]
        .iter()
        .map(|&(x, y)| Point2::new(x, y))
        .collect(),
    )?;
    let (area, c) = area_and_centroid(&l)?;
    println!("area {area:.1} mm^2, centroid ({:.2}, {:.2})", c.x, c.y);
    println!(
        "centroid depth {:.2} mm (negative: outside)",
        distance_to_contour(c, &l)
    );
    let (pole, r) = pole_of_inaccessibility(&l, DEFAULT_POLE_PRECISION_MM)?;
    println!("pole ({:.2}, {:.2}), clearance {r:.2} mm", pole.x, pole.y);

    let a = [Point2::new(0., 0.), Point2::new(100., 0.)];
    let b = [Point2::new(50., 40.), Point2::new(200., 300.)];
    println!("polyline distance {:.1} mm", polyline_min_distance(&a, &b)?);
    Ok(())
}
