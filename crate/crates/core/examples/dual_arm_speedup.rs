//! Runs the one-arm versus two-arm grid on the bundled ARC-scale
//! scenarios and prints mean times and the slowdown of a single arm.
//!
//! cargo run --release --example dual_arm_speedup -- [runs]

use binpick::model::load_scenario;
use binpick::sim::experiment::ExperimentGrid;
use binpick::sim::{run_experiment, SimConfig};

fn main() -> binpick::Result<()> {
    let runs: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    let rates = vec![0.5, 0.625, 0.75, 0.875, 1.0];
    for file in ["arc_final_stow.json", "arc_final.json"] {
        let path = format!("{}/data/{file}", env!("CARGO_MANIFEST_DIR"));
        let scenario = load_scenario(&std::fs::read_to_string(path)?)?;
        let grid = ExperimentGrid {
            success_rates: rates.clone(),
            arms: vec![1, 2],
            runs_per_cell: runs,
            base: SimConfig::default(),
        };
        let cells = run_experiment(&scenario, &grid)?;
        println!("{} task, {runs} runs per cell", scenario.task);
        println!(
            "{:>6} {:>16} {:>16} {:>7} {:>6}",
            "rate", "1 arm [s]", "2 arms [s]", "ratio", "goals"
        );
        let n = rates.len();
        for (i, rate) in rates.iter().enumerate() {
            let (one, two) = (&cells[i], &cells[n + i]);
            let goals = one
                .logs
                .iter()
                .chain(&two.logs)
                .filter(|l| l.outcome.goal_met)
                .count();
            println!(
                "{rate:>6} {:>9.1} ± {:>5.1} {:>9.1} ± {:>5.1} {:>7.3} {goals:>3}/{}",
                one.stats.mean_s,
                one.stats.stddev_s,
                two.stats.mean_s,
                two.stats.stddev_s,
                one.stats.mean_s / two.stats.mean_s,
                2 * runs
            );
        }
    }
    Ok(())
}
