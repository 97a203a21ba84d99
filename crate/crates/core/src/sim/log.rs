//! Episode records and their newline-delimited JSON form.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{Arm, ContainerKind, ItemId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Perceive,
    /// A task was handed to an arm.
    Assign,
    GraspAttempt,
    GraspSuccess,
    GraspFail,
    WeightReject,
    Place,
    /// A move-away task was handed to an arm.
    MoveAway,
    /// An arm finished its task and is free.
    Idle,
}

impl ActionKind {
    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Perceive => "perceive",
            ActionKind::Assign => "assign",
            ActionKind::GraspAttempt => "grasp_attempt",
            ActionKind::GraspSuccess => "grasp_success",
            ActionKind::GraspFail => "grasp_fail",
            ActionKind::WeightReject => "weight_reject",
            ActionKind::Place => "place",
            ActionKind::MoveAway => "move_away",
            ActionKind::Idle => "idle",
        }
    }

    pub fn is_assignment(self) -> bool {
        matches!(self, ActionKind::Assign | ActionKind::MoveAway)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub time_s: f64,
    /// `None` for perception.
    pub arm: Option<Arm>,
    pub kind: ActionKind,
    pub item_id: Option<ItemId>,
    /// Free-form reason codes; keys are sorted.
    #[serde(default)]
    pub detail: BTreeMap<String, Value>,
}

impl Record {
    pub fn detail_f64(&self, key: &str) -> Option<f64> {
        self.detail.get(key).and_then(Value::as_f64)
    }

    pub fn detail_str(&self, key: &str) -> Option<&str> {
        self.detail.get(key).and_then(Value::as_str)
    }

    /// Length of the activity this record starts, if it has one.
    pub fn duration_s(&self) -> Option<f64> {
        self.detail_f64("duration_s")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outcome {
    /// Items that reached their goal container.
    pub completed: usize,
    pub goal: usize,
    pub goal_met: bool,
    pub total_time_s: f64,
    /// Final container of every item.
    pub locations: BTreeMap<ItemId, ContainerKind>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeLog {
    pub records: Vec<Record>,
    pub outcome: Outcome,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeLine {
    outcome: Outcome,
}

impl EpisodeLog {
    pub fn push(&mut self, r: Record) {
        debug_assert!(self.records.last().is_none_or(|l| l.time_s <= r.time_s));
        self.records.push(r);
    }

    pub fn count(&self, kind: ActionKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    /// One record per line followed by an outcome line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        let line = OutcomeLine {
            outcome: self.outcome.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("outcome serializes"));
        out.push('\n');
        out
    }

    /// Parses [`EpisodeLog::to_jsonl`] output. The outcome line is optional
    /// and must be last when present.
    pub fn from_jsonl(text: &str) -> Result<EpisodeLog> {
        let mut log = EpisodeLog::default();
        let mut saw_outcome = false;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let at = |e: serde_json::Error| Error::Parse {
                line: i + 1,
                column: e.column(),
                message: e.to_string(),
            };
            if saw_outcome {
                return Err(Error::Parse {
                    line: i + 1,
                    column: 1,
                    message: "record after the outcome line".into(),
                });
            }
            let v: Value = serde_json::from_str(line).map_err(at)?;
            if v.get("outcome").is_some() {
                log.outcome = serde_json::from_value::<OutcomeLine>(v)
                    .map_err(at)?
                    .outcome;
                saw_outcome = true;
                continue;
            }
            let r: Record = serde_json::from_value(v).map_err(at)?;
            if log.records.last().is_some_and(|l| l.time_s > r.time_s) {
                return Err(Error::Parse {
                    line: i + 1,
                    column: 1,
                    message: "timestamps must not decrease".into(),
                });
            }
            log.records.push(r);
        }
        Ok(log)
    }
}
