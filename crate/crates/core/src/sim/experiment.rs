//! Grids of seeded episodes and their summary table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Scenario, TaskKind};

use super::config::SimConfig;
use super::episode::run_episode;
use super::log::EpisodeLog;

pub const STATS_HEADER: &str = "task,arms,success_rate,runs,mean_s,stddev_s";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub success_rates: Vec<f64>,
    pub arms: Vec<u8>,
    pub runs_per_cell: usize,
    /// Everything except arms, rate and seed is taken from here; the seed
    /// is the base seed.
    pub base: SimConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellStats {
    pub task: TaskKind,
    pub arms: u8,
    pub success_rate: f64,
    pub runs: usize,
    pub mean_s: f64,
    /// Sample standard deviation; 0 for a single run.
    pub stddev_s: f64,
    pub times_s: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub stats: CellStats,
    /// One log per run, in seed order.
    pub logs: Vec<EpisodeLog>,
}

pub fn mean_and_stddev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every (arms, rate) cell with seeds `base.seed + run`. Cells are
/// ordered by arms, then by rate, as given.
pub fn run_experiment(scenario: &Scenario, grid: &ExperimentGrid) -> Result<Vec<CellResult>> {
    if grid.runs_per_cell == 0 {
        return Err(Error::Argument("runs per cell must be at least 1".into()));
    }
    if grid.success_rates.is_empty() || grid.arms.is_empty() {
        return Err(Error::Argument("experiment grid is empty".into()));
    }
    let cells: Vec<(u8, f64)> = grid
        .arms
        .iter()
        .flat_map(|&a| grid.success_rates.iter().map(move |&r| (a, r)))
        .collect();
    let jobs: Vec<SimConfig> = cells
        .iter()
        .flat_map(|&(arms, rate)| {
            (0..grid.runs_per_cell).map(move |run| SimConfig {
                arms,
                grasp_success_rate: rate,
                seed: grid.base.seed.wrapping_add(run as u64),
                ..grid.base.clone()
            })
        })
        .collect();
    for c in &jobs {
        c.validate()?;
    }
    let logs: Vec<EpisodeLog> = jobs
        .par_iter()
        .map(|cfg| run_episode(scenario, cfg))
        .collect::<Result<_>>()?;
    let mut logs = logs.into_iter();
    Ok(cells
        .into_iter()
        .map(|(arms, rate)| {
            let cell_logs: Vec<EpisodeLog> = logs.by_ref().take(grid.runs_per_cell).collect();
            let times: Vec<f64> = cell_logs.iter().map(|l| l.outcome.total_time_s).collect();
            let (mean_s, stddev_s) = mean_and_stddev(&times);
            CellResult {
                stats: CellStats {
                    task: scenario.task,
                    arms,
                    success_rate: rate,
                    runs: grid.runs_per_cell,
                    mean_s,
                    stddev_s,
                    times_s: times,
                },
                logs: cell_logs,
            }
        })
        .collect())
}

pub fn stats_csv(cells: &[CellStats]) -> String {
    let mut out = format!("{STATS_HEADER}\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{:.3},{:.3}\n",
            c.task, c.arms, c.success_rate, c.runs, c.mean_s, c.stddev_s
        ));
    }
    out
}

/// Parses a table written by [`stats_csv`].
pub fn parse_stats_csv(text: &str) -> Result<Vec<CellStats>> {
    let mut lines = text.lines();
    if lines.next() != Some(STATS_HEADER) {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("expected header `{STATS_HEADER}`"),
        });
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = |m: &str| Error::Parse {
                line: i + 2,
                column: 1,
                message: m.to_string(),
            };
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad("expected 6 fields"));
            }
            let task = match f[0] {
                "stow" => TaskKind::Stow,
                "pick" => TaskKind::Pick,
                _ => return Err(bad("unknown task")),
            };
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            Ok(CellStats {
                task,
                arms: f[1].parse().map_err(|_| bad("bad arm count"))?,
                success_rate: num(f[2])?,
                runs: f[3].parse().map_err(|_| bad("bad run count"))?,
                mean_s: num(f[4])?,
                stddev_s: num(f[5])?,
                times_s: Vec::new(),
            })
        })
        .collect()
}
