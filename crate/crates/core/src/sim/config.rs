use serde::{Deserialize, Serialize};

use crate::coordination::DEFAULT_MIN_SEPARATION_MM;
use crate::error::{Error, Result};
use crate::model::TaskKind;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerceptionLatency {
    pub stow_s: f64,
    pub pick_s: f64,
}

impl PerceptionLatency {
    pub fn for_task(&self, task: TaskKind) -> f64 {
        match task {
            TaskKind::Stow => self.stow_s,
            TaskKind::Pick => self.pick_s,
        }
    }
}

impl Default for PerceptionLatency {
    fn default() -> Self {
        Self {
            stow_s: 11.0,
            pick_s: 13.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// 1 or 2.
    pub arms: u8,
    pub grasp_success_rate: f64,
    pub perception_latency_s: PerceptionLatency,
    pub ee_speed_mm_per_s: f64,
    pub grasp_dwell_s: f64,
    pub release_dwell_s: f64,
    /// Fixed cost per waypoint segment: acceleration, settling and the
    /// vertical approach that the 2D path does not capture.
    pub segment_overhead_s: f64,
    pub seed: u64,
    pub scale_noise_g: f64,
    pub max_episode_s: f64,
    pub map_resolution_mm_per_px: f64,
    pub min_separation_mm: f64,
    /// Upper bound on later order items considered when placing into a box.
    pub placement_lookahead: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            arms: 2,
            grasp_success_rate: 1.0,
            perception_latency_s: PerceptionLatency::default(),
            ee_speed_mm_per_s: 800.0,
            grasp_dwell_s: 4.0,
            release_dwell_s: 2.0,
            segment_overhead_s: 3.2,
            seed: 0,
            scale_noise_g: 1.0,
            max_episode_s: 1800.0,
            map_resolution_mm_per_px: 2.0,
            min_separation_mm: DEFAULT_MIN_SEPARATION_MM,
            placement_lookahead: 2,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(
            format!("SimConfig.{field}"),
            format!("must be > 0, got {v}"),
        ))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.arms) {
            return Err(Error::validation(
                "SimConfig.arms",
                format!("must be 1 or 2, got {}", self.arms),
            ));
        }
        if !(0.0..=1.0).contains(&self.grasp_success_rate) {
            return Err(Error::validation(
                "SimConfig.grasp_success_rate",
                format!("must lie in [0, 1], got {}", self.grasp_success_rate),
            ));
        }
        positive(
            "perception_latency_s.stow_s",
            self.perception_latency_s.stow_s,
        )?;
        positive(
            "perception_latency_s.pick_s",
            self.perception_latency_s.pick_s,
        )?;
        positive("ee_speed_mm_per_s", self.ee_speed_mm_per_s)?;
        positive("grasp_dwell_s", self.grasp_dwell_s)?;
        positive("release_dwell_s", self.release_dwell_s)?;
        positive("max_episode_s", self.max_episode_s)?;
        positive("map_resolution_mm_per_px", self.map_resolution_mm_per_px)?;
        if !(self.segment_overhead_s >= 0.0) {
            return Err(Error::validation(
                "SimConfig.segment_overhead_s",
                "must be >= 0",
            ));
        }
        if !(self.scale_noise_g >= 0.0) {
            return Err(Error::validation("SimConfig.scale_noise_g", "must be >= 0"));
        }
        if !(self.min_separation_mm >= 0.0) {
            return Err(Error::validation(
                "SimConfig.min_separation_mm",
                "must be >= 0",
            ));
        }
        Ok(())
    }
}
