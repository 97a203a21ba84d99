//! Heuristic grasp selection from item contours and the height map.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    area_and_centroid, distance_to_contour, pole_of_inaccessibility, surface_normal, Point2,
    Polygon, Vec3, DEFAULT_POLE_PRECISION_MM,
};
use crate::model::{Item, SceneMaps};

/// Items heavier than this use the lower center-of-mass threshold.
pub const HEAVY_ITEM_G: f64 = 800.0;
pub const TAU_LIGHT: f64 = 0.8;
pub const TAU_HEAVY: f64 = 0.4;
pub const NORMAL_WINDOW_PX: usize = 11;
pub const TRANSLATION_SIGMA_MM: f64 = 15.0;
pub const YAW_SIGMA_RAD: f64 = 60.0 * PI / 180.0;
pub const WEIGHT_ABS_TOLERANCE_G: f64 = 5.0;
pub const WEIGHT_REL_TOLERANCE: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspKind {
    Suction,
    Pinch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspAnchor {
    Pole,
    CenterOfMass,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspPose {
    pub kind: GraspKind,
    pub point_mm: Vec3,
    pub normal: Vec3,
    /// Finger direction about the vertical axis; pinch grasps only.
    pub pinch_yaw_rad: Option<f64>,
    pub anchor: GraspAnchor,
}

impl GraspPose {
    pub fn point_2d(&self) -> Point2 {
        Point2::new(self.point_mm.x, self.point_mm.y)
    }
}

/// Threshold on `d_m / d_p` above which the center of mass is preferred.
pub fn com_threshold(mass_g: f64) -> f64 {
    if mass_g > HEAVY_ITEM_G {
        TAU_HEAVY
    } else {
        TAU_LIGHT
    }
}

/// Pole and centroid clearances used by [`select_grasp_point`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraspGeometry {
    pub pole: Point2,
    pub pole_clearance: f64,
    pub centroid: Point2,
    /// Centroid clearance, clamped to zero when the centroid is outside.
    pub centroid_clearance: f64,
}

impl GraspGeometry {
    pub fn of(contour: &Polygon) -> Result<Self> {
        let (_, centroid) = area_and_centroid(contour)?;
        let (pole, d_p) = pole_of_inaccessibility(
            contour,
            DEFAULT_POLE_PRECISION_MM.min(precision_for(contour)),
        )?;
        Ok(GraspGeometry {
            pole,
            pole_clearance: d_p,
            centroid,
            centroid_clearance: distance_to_contour(centroid, contour).max(0.0),
        })
    }

    pub fn ratio(&self) -> f64 {
        self.centroid_clearance / self.pole_clearance
    }
}

// relative precision keeps the anchor decision scale-free
fn precision_for(contour: &Polygon) -> f64 {
    let (lo, hi) = contour.bounds();
    ((hi.x - lo.x).min(hi.y - lo.y) * 1e-4).max(1e-9)
}

/// Grasp at the center of mass when it is deep enough inside the contour
/// relative to the pole of inaccessibility, otherwise at the pole.
pub fn select_grasp_point(contour: &Polygon, mass_g: f64) -> Result<(Point2, GraspAnchor)> {
    if !(mass_g > 0.0) {
        return Err(Error::Argument(format!(
            "mass must be positive, got {mass_g}"
        )));
    }
    let g = GraspGeometry::of(contour)?;
    if g.ratio() > com_threshold(mass_g) {
        Ok((g.centroid, GraspAnchor::CenterOfMass))
    } else {
        Ok((g.pole, GraspAnchor::Pole))
    }
}

/// Lifts a 2D grasp point to a full pose using the height map.
pub fn lift_to_pose(
    point: Point2,
    anchor: GraspAnchor,
    kind: GraspKind,
    maps: &SceneMaps,
    bin_center: Point2,
) -> Result<GraspPose> {
    let (col, row) = maps.pixel_of(point).ok_or_else(|| {
        Error::Argument(format!(
            "grasp point ({:.1}, {:.1}) outside the maps",
            point.x, point.y
        ))
    })?;
    if maps.label_at(col, row).is_none() {
        return Err(Error::Argument(format!(
            "grasp point ({:.1}, {:.1}) is not on an item",
            point.x, point.y
        )));
    }
    let normal = surface_normal(maps, (col, row), NORMAL_WINDOW_PX)?.normal;
    let pinch_yaw_rad = match kind {
        GraspKind::Pinch => {
            let d = bin_center - point;
            Some(d.y.atan2(d.x))
        }
        GraspKind::Suction => None,
    };
    Ok(GraspPose {
        kind,
        point_mm: Vec3::new(point.x, point.y, maps.depth_at(col, row)),
        normal,
        pinch_yaw_rad,
        anchor,
    })
}

/// Noise model for repeated grasp attempts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraspNoise {
    pub translation_sigma_mm: f64,
    pub yaw_sigma_rad: f64,
}

impl Default for GraspNoise {
    fn default() -> Self {
        Self {
            translation_sigma_mm: TRANSLATION_SIGMA_MM,
            yaw_sigma_rad: YAW_SIGMA_RAD,
        }
    }
}

/// Gaussian perturbation of the horizontal grasp position (and pinch yaw).
/// The caller re-queries depth and normal at the new point.
pub fn perturb_grasp<R: Rng + ?Sized>(g: &GraspPose, noise: &GraspNoise, rng: &mut R) -> GraspPose {
    let mut out = *g;
    // Normal::new only fails for negative or non-finite sigma
    let t = Normal::new(0.0, noise.translation_sigma_mm.max(0.0)).expect("valid sigma");
    out.point_mm.x += t.sample(rng);
    out.point_mm.y += t.sample(rng);
    if let Some(yaw) = g.pinch_yaw_rad {
        let r = Normal::new(0.0, noise.yaw_sigma_rad.max(0.0)).expect("valid sigma");
        out.pinch_yaw_rad = Some(yaw + r.sample(rng));
    }
    out
}

pub fn choose_grasp_kind<R: Rng + ?Sized>(item: &Item, rng: &mut R) -> GraspKind {
    if rng.random_bool(item.suction_probability.clamp(0.0, 1.0)) {
        GraspKind::Suction
    } else {
        GraspKind::Pinch
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightCheck {
    Accept,
    Reject,
}

pub fn weight_tolerance(expected_g: f64) -> f64 {
    WEIGHT_ABS_TOLERANCE_G.max(WEIGHT_REL_TOLERANCE * expected_g)
}

/// Accepts a grasp when the measured weight change is strictly within
/// `max(5 g, 10 %)` of the expected item weight.
pub fn verify_weight(expected_g: f64, measured_delta_g: f64) -> WeightCheck {
    if (measured_delta_g - expected_g).abs() < weight_tolerance(expected_g) {
        WeightCheck::Accept
    } else {
        WeightCheck::Reject
    }
}
