//! Deterministic discrete-event simulation of stow and pick episodes.

pub mod config;
pub mod episode;
pub mod experiment;
pub mod log;
pub mod scene;

pub use config::{PerceptionLatency, SimConfig};
pub use episode::{initial_scene, run_episode};
pub use experiment::{run_experiment, CellStats, ExperimentGrid};
pub use log::{ActionKind, EpisodeLog, Outcome, Record};
pub use scene::{render, sample_scene, ContainerScene, Rendered, SceneItem, SimScene};
