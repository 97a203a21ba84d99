//! Simulates one episode, summarizes its log and writes the JSONL log and
//! an SVG timeline next to each other.
//!
//! cargo run --example episode_timeline -- [pick|stow] [seed] [out-dir]

use binpick::model::load_scenario;
use binpick::report::timeline_svg;
use binpick::sim::{run_episode, ActionKind, SimConfig};

fn main() -> binpick::Result<()> {
    let mut args = std::env::args().skip(1);
    let task = args.next().unwrap_or_else(|| "pick".into());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| ".".into()));
    let file = if task == "stow" {
        "arc_final_stow.json"
    } else {
        "arc_final.json"
    };
    let path = format!("{}/data/{file}", env!("CARGO_MANIFEST_DIR"));
    let scenario = load_scenario(&std::fs::read_to_string(path)?)?;
    let cfg = SimConfig {
        seed,
        grasp_success_rate: 0.75,
        ..SimConfig::default()
    };
    let log = run_episode(&scenario, &cfg)?;
    let o = &log.outcome;
    println!(
        "{task}: {}/{} items in {:.1} s (goal met: {})",
        o.completed, o.goal, o.total_time_s, o.goal_met
    );
    for k in [
        ActionKind::Perceive,
        ActionKind::GraspAttempt,
        ActionKind::GraspFail,
        ActionKind::WeightReject,
        ActionKind::MoveAway,
        ActionKind::Place,
    ] {
        println!("  {:<14} {}", k.name(), log.count(k));
    }
    std::fs::create_dir_all(&out)?;
    let jsonl = out.join(format!("{task}_{seed}.jsonl"));
    let svg = out.join(format!("{task}_{seed}.svg"));
    std::fs::write(&jsonl, log.to_jsonl())?;
    std::fs::write(&svg, timeline_svg(&log))?;
    println!("wrote {} and {}", jsonl.display(), svg.display());
    Ok(())
}
