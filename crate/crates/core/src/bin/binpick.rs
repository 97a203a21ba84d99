//! binpick: run simulations and inspect their artifacts.
//!
//! Exit codes: 0 success, 1 output failure, 2 bad flags, 3 bad input file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use binpick::model::{load_scenario, Scenario, TaskKind};
use binpick::report::{graph_report, timeline_svg, RunReport, SceneFile, StatsRow};
use binpick::sim::experiment::stats_csv;
use binpick::sim::{initial_scene, render, run_experiment, EpisodeLog, ExperimentGrid, SimConfig};

#[derive(Parser)]
#[command(
    name = "binpick",
    version,
    about = "Dual-arm bin-picking planner and simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Pick,
    Stow,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run seeded episodes over a grid of arm counts and grasp success rates.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Must match the scenario's task when given.
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        arms: Vec<u8>,
        #[arg(long = "success-rate", value_delimiter = ',', default_value = "1.0")]
        success_rate: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// SimConfig JSON; arms, rate and seed flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resolve the clutter graph of a rendered scene and print it as dot.
    Graph {
        #[arg(long)]
        scene: PathBuf,
        /// Append the deleted edges and their evidence.
        #[arg(long)]
        show_removed: bool,
    },
    /// Draw an episode log as an SVG timeline.
    Timeline {
        #[arg(long)]
        episode: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the rendered initial scene of every non-empty container.
    Render {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2.0)]
        resolution_mm_per_px: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Flags(String),
    Input(String),
    Output(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Output(_) => 1,
            Failure::Flags(_) => 2,
            Failure::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Flags(m) | Failure::Input(m) | Failure::Output(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))
}

fn scenario_from(path: &Path) -> Result<Scenario, Failure> {
    load_scenario(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn out_dir(path: &Path) -> Outcome {
    fs::create_dir_all(path).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    scenario_path: &Path,
    task: Option<TaskArg>,
    arms: Vec<u8>,
    rates: Vec<f64>,
    runs: usize,
    seed: u64,
    config: Option<&Path>,
    out: &Path,
) -> Outcome {
    if arms.iter().any(|a| !(1..=2).contains(a)) {
        return Err(Failure::Flags("--arms takes 1 or 2".into()));
    }
    if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Failure::Flags("--success-rate values lie in [0, 1]".into()));
    }
    if runs == 0 {
        return Err(Failure::Flags("--runs must be at least 1".into()));
    }
    let scenario = scenario_from(scenario_path)?;
    let wanted = task.map(|t| match t {
        TaskArg::Pick => TaskKind::Pick,
        TaskArg::Stow => TaskKind::Stow,
    });
    if wanted.is_some_and(|t| t != scenario.task) {
        return Err(Failure::Input(format!(
            "{} is a {} scenario",
            scenario_path.display(),
            scenario.task
        )));
    }
    let mut base = match config {
        Some(p) => serde_json::from_str::<SimConfig>(&read(p)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        None => SimConfig::default(),
    };
    base.seed = seed;
    let grid = ExperimentGrid {
        success_rates: rates.clone(),
        arms: arms.clone(),
        runs_per_cell: runs,
        base: base.clone(),
    };
    let cells = run_experiment(&scenario, &grid).map_err(|e| Failure::Input(e.to_string()))?;
    out_dir(out)?;
    let mut artifacts = vec!["stats.csv".to_string()];
    for c in &cells {
        for (run, log) in c.logs.iter().enumerate() {
            let name = format!(
                "episode_a{}_s{}_{run}.jsonl",
                c.stats.arms, c.stats.success_rate
            );
            write(&out.join(&name), &log.to_jsonl())?;
            artifacts.push(name);
        }
    }
    let stats: Vec<_> = cells.iter().map(|c| c.stats.clone()).collect();
    write(&out.join("stats.csv"), &stats_csv(&stats))?;
    artifacts.push("report.json".into());
    let report = RunReport {
        scenario: scenario_path.display().to_string(),
        config: base,
        success_rates: rates,
        arms,
        runs,
        stats: stats.iter().map(StatsRow::from).collect(),
        artifacts,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write(&out.join("report.json"), &(json + "\n"))?;
    for s in &stats {
        println!(
            "{} arms={} rate={} mean={:.1}s sd={:.1}s",
            s.task, s.arms, s.success_rate, s.mean_s, s.stddev_s
        );
    }
    Ok(())
}

fn graph(scene: &Path, show_removed: bool) -> Outcome {
    let s = SceneFile::from_json(&read(scene)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", scene.display())))?;
    let dot = graph_report(&s, show_removed).map_err(|e| Failure::Input(e.to_string()))?;
    print!("{dot}");
    Ok(())
}

fn timeline(episode: &Path, out: &Path) -> Outcome {
    let log = EpisodeLog::from_jsonl(&read(episode)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", episode.display())))?;
    write(out, &timeline_svg(&log))
}

fn render_scenes(scenario_path: &Path, seed: u64, res: f64, out: &Path) -> Outcome {
    if !(res > 0.0 && res.is_finite()) {
        return Err(Failure::Flags("--resolution-mm-per-px must be > 0".into()));
    }
    let scenario = scenario_from(scenario_path)?;
    let scene = initial_scene(&scenario, &scenario.workspace, seed)
        .map_err(|e| Failure::Input(e.to_string()))?;
    out_dir(out)?;
    let class_names: std::collections::BTreeMap<_, _> = scenario
        .items
        .iter()
        .map(|i| (i.id.clone(), i.class_name.clone()))
        .collect();
    for (kind, c) in &scene.containers {
        if c.items.is_empty() {
            continue;
        }
        let r = render(c, res);
        let file = SceneFile {
            class_names: r
                .detections
                .iter()
                .map(|d| (d.item_id.clone(), class_names[&d.item_id].clone()))
                .collect(),
            maps: r.maps,
            detections: r.detections,
        };
        let path = out.join(format!("scene_{kind}.json"));
        write(&path, &file.to_json())?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("BINPICK_LOG", "warn"))
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.cmd {
        Cmd::Simulate {
            scenario,
            task,
            arms,
            success_rate,
            runs,
            seed,
            config,
            out,
        } => simulate(
            &scenario,
            task,
            arms,
            success_rate,
            runs,
            seed,
            config.as_deref(),
            &out,
        ),
        Cmd::Graph {
            scene,
            show_removed,
        } => graph(&scene, show_removed),
        Cmd::Timeline { episode, out } => timeline(&episode, &out),
        Cmd::Render {
            scenario,
            seed,
            resolution_mm_per_px,
            out,
        } => render_scenes(&scenario, seed, resolution_mm_per_px, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("binpick: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
