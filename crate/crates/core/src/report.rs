//! Artifacts for people: rendered-scene files, clutter-graph dumps and
//! episode timelines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::clutter::{resolve, GraphParams};
use crate::error::{Error, Result};
use crate::model::{Arm, Detection, ItemId, SceneMaps};
use crate::sim::experiment::CellStats;
use crate::sim::log::{ActionKind, EpisodeLog, Record};
use crate::sim::SimConfig;

/// One perceived container as written to disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub maps: SceneMaps,
    pub detections: Vec<Detection>,
    /// Vertex labels; items without an entry are labelled by id.
    #[serde(default)]
    pub class_names: BTreeMap<ItemId, String>,
}

impl SceneFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<SceneFile> {
        let s: SceneFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        s.maps.validate()?;
        Ok(s)
    }
}

/// Summary of one `simulate` invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub config: SimConfig,
    pub success_rates: Vec<f64>,
    pub arms: Vec<u8>,
    pub runs: usize,
    pub stats: Vec<StatsRow>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub arms: u8,
    pub success_rate: f64,
    pub mean_s: f64,
    pub stddev_s: f64,
    pub times_s: Vec<f64>,
}

impl From<&CellStats> for StatsRow {
    fn from(c: &CellStats) -> Self {
        StatsRow {
            arms: c.arms,
            success_rate: c.success_rate,
            mean_s: c.mean_s,
            stddev_s: c.stddev_s,
            times_s: c.times_s.clone(),
        }
    }
}

/// Resolves the scene's clutter graph and prints the DAG in dot format.
/// With `show_removed`, a trailing comment lists the deleted edges.
pub fn graph_report(scene: &SceneFile, show_removed: bool) -> Result<String> {
    let mut names = scene.class_names.clone();
    for d in &scene.detections {
        names
            .entry(d.item_id.clone())
            .or_insert_with(|| d.item_id.to_string());
    }
    let r = resolve(
        &scene.maps,
        &scene.detections,
        &names,
        &GraphParams::default(),
    )?;
    let mut out = r.dag().to_dot();
    if show_removed {
        let edges: Vec<String> = r
            .fas
            .removed
            .iter()
            .map(|((a, b), w)| format!("{a} -> {b} ({w})"))
            .collect();
        let _ = writeln!(
            out,
            "// removed: {{{}}} evidence sum {}",
            edges.join(", "),
            r.fas.removed_evidence()
        );
    }
    Ok(out)
}

const PX_PER_S: f64 = 2.0;
const LANE_H: f64 = 28.0;
const LABEL_W: f64 = 90.0;
const MARK_W: f64 = 2.0;
const LANES: [&str; 3] = ["left arm", "right arm", "perception"];

fn lane(r: &Record) -> usize {
    match r.arm {
        Some(Arm::Left) => 0,
        Some(Arm::Right) => 1,
        None => 2,
    }
}

fn color(k: ActionKind) -> &'static str {
    match k {
        ActionKind::Perceive => "#7f7f7f",
        ActionKind::Assign => "#1f77b4",
        ActionKind::MoveAway => "#9467bd",
        ActionKind::GraspAttempt => "#ff7f0e",
        ActionKind::GraspSuccess => "#2ca02c",
        ActionKind::GraspFail => "#d62728",
        ActionKind::WeightReject => "#8c564b",
        ActionKind::Place => "#17becf",
        ActionKind::Idle => "#bcbd22",
    }
}

fn xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// SVG with one lane per arm and one for perception. Every record becomes
/// one `span` rectangle: its duration when it has one, a thin mark
/// otherwise. Output depends only on the log.
pub fn timeline_svg(log: &EpisodeLog) -> String {
    let end = log
        .records
        .iter()
        .map(|r| r.time_s + r.duration_s().unwrap_or(0.0))
        .fold(log.outcome.total_time_s, f64::max);
    let plot_w = (end * PX_PER_S).ceil().max(100.0);
    let width = LABEL_W + plot_w + 10.0;
    let axis_y = LANE_H * LANES.len() as f64 + 10.0;
    let height = axis_y + 30.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    for (i, name) in LANES.iter().enumerate() {
        let y = 5.0 + i as f64 * LANE_H;
        let _ = writeln!(
            s,
            r##"<rect class="lane" x="{LABEL_W:.0}" y="{y:.0}" width="{plot_w:.0}" height="{h:.0}" fill="#f4f4f4"/>"##,
            h = LANE_H - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="4" y="{:.0}">{name}</text>"#,
            y + LANE_H / 2.0 + 2.0
        );
    }
    for r in &log.records {
        let y = 5.0 + lane(r) as f64 * LANE_H + 2.0;
        let x = LABEL_W + r.time_s * PX_PER_S;
        let w = r
            .duration_s()
            .map_or(MARK_W, |d| (d * PX_PER_S).max(MARK_W));
        let title = match &r.item_id {
            Some(id) => format!("{} {} at {:.2} s", r.kind, id, r.time_s),
            None => format!("{} at {:.2} s", r.kind, r.time_s),
        };
        let _ = writeln!(
            s,
            r#"<rect class="span" x="{x:.2}" y="{y:.0}" width="{w:.2}" height="{h:.0}" fill="{c}" fill-opacity="0.8"><title>{t}</title></rect>"#,
            h = LANE_H - 8.0,
            c = color(r.kind),
            t = xml(&title)
        );
    }
    let step = if end > 600.0 { 60.0 } else { 10.0 };
    let mut t = 0.0;
    while t <= end + 1e-9 {
        let x = LABEL_W + t * PX_PER_S;
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{axis_y:.0}" x2="{x:.2}" y2="{:.0}" stroke="#333"/><text x="{x:.2}" y="{:.0}" text-anchor="middle">{t:.0}</text>"##,
            axis_y + 4.0,
            axis_y + 16.0
        );
        t += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.0}" y="{:.0}">time [s]</text>"#,
        LABEL_W + plot_w - 40.0,
        axis_y + 28.0
    );
    s.push_str("</svg>\n");
    s
}

/// Number of record spans in an SVG written by [`timeline_svg`].
pub fn span_count(svg: &str) -> usize {
    svg.matches(r#"class="span""#).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point2, Polygon};
    use serde_json::json;

    fn rec(t: f64, arm: Option<Arm>, kind: ActionKind, dur: Option<f64>) -> Record {
        Record {
            time_s: t,
            arm,
            kind,
            item_id: Some("a&b".into()),
            detail: dur
                .map(|d| BTreeMap::from([("duration_s".to_string(), json!(d))]))
                .unwrap_or_default(),
        }
    }

    #[test]
    fn empty_log_has_lanes_and_no_spans() {
        let svg = timeline_svg(&EpisodeLog::default());
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches(r#"class="lane""#).count(), 3);
        assert_eq!(span_count(&svg), 0);
    }

    #[test]
    fn one_span_per_record_in_its_lane() {
        let mut log = EpisodeLog::default();
        log.push(rec(0.0, None, ActionKind::Perceive, Some(11.0)));
        log.push(rec(
            11.0,
            Some(Arm::Right),
            ActionKind::GraspAttempt,
            Some(4.0),
        ));
        log.push(rec(20.0, Some(Arm::Right), ActionKind::Place, Some(2.0)));
        let svg = timeline_svg(&log);
        assert_eq!(span_count(&svg), 3);
        // right lane starts at 5 + 28, plus 2
        assert_eq!(svg.matches(r#"y="35" width"#).count(), 2);
        assert!(svg.contains(r#"x="112.00" y="35" width="8.00""#));
        assert!(svg.contains("a&amp;b"));
        assert_eq!(svg, timeline_svg(&log));
    }

    fn square_scene() -> SceneFile {
        let mut maps = SceneMaps::empty(Point2::new(0.0, 0.0), 1.0, 20, 10);
        let mut dets = Vec::new();
        for (k, x0) in [("p", 1usize), ("q", 12)] {
            for r in 1..7 {
                for c in x0..x0 + 6 {
                    maps.set(c, r, Some(k.into()), 10.0);
                }
            }
            let (a, b) = (x0 as f64 + 0.5, x0 as f64 + 5.5);
            dets.push(Detection {
                item_id: k.into(),
                contour: Polygon::new(vec![
                    Point2::new(a, 1.5),
                    Point2::new(b, 1.5),
                    Point2::new(b, 6.5),
                    Point2::new(a, 6.5),
                ])
                .unwrap(),
                confidence: 0.9,
                fail_count: 0,
            });
        }
        SceneFile {
            maps,
            detections: dets,
            class_names: BTreeMap::new(),
        }
    }

    #[test]
    fn disjoint_scene_graph() {
        let scene = square_scene();
        let back = SceneFile::from_json(&scene.to_json()).unwrap();
        assert_eq!(back, scene);
        let dot = graph_report(&scene, true).unwrap();
        assert_eq!(dot.matches("[label=\"p (0.90)\"").count(), 1);
        assert!(!dot.contains("->"));
        assert!(dot.ends_with("// removed: {} evidence sum 0\n"));
    }

    #[test]
    fn malformed_scene_rejected() {
        assert!(matches!(
            SceneFile::from_json("{\"maps\": 1}"),
            Err(Error::Parse { .. })
        ));
    }
}
