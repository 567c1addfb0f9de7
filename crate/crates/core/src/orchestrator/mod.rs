//! Interference-aware stage-by-stage placement with bounded replication.

mod latency;
mod plan;
mod schedule;

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dag::{NodeId, TaskTypeId};
use crate::device::{DeviceError, DeviceId};

pub use latency::{candidate_latency, data_transfer_latency, model_upload_latency, LatencyBreakdown};
pub(crate) use plan::InstancePlan;
pub use schedule::schedule_instance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("no alive device can host node {0}")]
    NoFeasibleDevice(NodeId),
    #[error("node {node} depends on {predecessor}, which is not placed yet")]
    UnplacedPredecessor { node: NodeId, predecessor: NodeId },
    #[error("LaTS model has no row for class {class:?}, task type {task_type}")]
    MissingModelRow { class: String, task_type: TaskTypeId },
    #[error("failure combination needs at least one probability")]
    EmptyList,
    #[error("invalid orchestrator parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// How latency is scaled before it is mixed with a probability.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LatencyNorm {
    Fixed(f64),
    /// Use the instance's latency under a pure-latency, no-replica dry run.
    #[default]
    Greedy,
}

impl Serialize for LatencyNorm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LatencyNorm::Fixed(x) => s.serialize_f64(*x),
            LatencyNorm::Greedy => s.serialize_str("greedy"),
        }
    }
}

impl<'de> Deserialize<'de> for LatencyNorm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(LatencyNorm::Fixed(x)),
            Raw::Int(x) => Ok(LatencyNorm::Fixed(x as f64)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl FromStr for LatencyNorm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "greedy" {
            return Ok(LatencyNorm::Greedy);
        }
        s.parse::<f64>()
            .map(LatencyNorm::Fixed)
            .map_err(|_| format!("expected \"greedy\" or a number, got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrchestratorParams {
    /// Weight of normalized latency against failure probability.
    pub alpha: f64,
    /// Combined failure probability at or above which replication is tried.
    pub beta: f64,
    /// Maximum number of replicas per task.
    pub gamma: u32,
    pub bandwidth_mbps: f64,
    pub latency_norm: LatencyNorm,
}

impl Default for OrchestratorParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.1,
            gamma: 3,
            bandwidth_mbps: 100.0,
            latency_norm: LatencyNorm::Greedy,
        }
    }
}

impl OrchestratorParams {
    pub fn check(&self) -> Result<(), ScheduleError> {
        let norm_ok = match self.latency_norm {
            LatencyNorm::Fixed(x) => x > 0.0 && x.is_finite(),
            LatencyNorm::Greedy => true,
        };
        if !(0.0..=1.0).contains(&self.alpha)
            || !(0.0..=1.0).contains(&self.beta)
            || !(self.bandwidth_mbps > 0.0)
            || !norm_ok
        {
            return Err(ScheduleError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }
}

/// `alpha * latency / latency_norm + (1 - alpha) * failure_prob`.
pub fn weighted_score(latency: f64, failure_prob: f64, alpha: f64, latency_norm: f64) -> f64 {
    alpha * (latency / latency_norm) + (1.0 - alpha) * failure_prob
}

/// A task with independent replicas fails only if every copy fails.
pub fn combined_failure(probs: &[f64]) -> Result<f64, ScheduleError> {
    if probs.is_empty() {
        return Err(ScheduleError::EmptyList);
    }
    Ok(probs.iter().product())
}

/// Probability that at least one task of the instance fails, treating tasks
/// as independent.
pub fn app_failure_prob<I: IntoIterator<Item = f64>>(task_failures: I) -> f64 {
    let survive: f64 = task_failures.into_iter().map(|f| 1.0 - f).product();
    (1.0 - survive).clamp(0.0, 1.0)
}

/// One copy of a task on one device.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskCopy {
    pub device: DeviceId,
    /// Upload + transfer + execution estimate on this device.
    pub latency: f64,
    /// Probability the device leaves before this copy finishes.
    pub failure_prob: f64,
}

/// A replica considered by the replication loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaStep {
    pub device: DeviceId,
    pub latency: f64,
    /// Combined failure probability if this replica is added.
    pub combined_failure: f64,
    pub score: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub node: NodeId,
    pub task_type: TaskTypeId,
    /// Primary device first, then accepted replicas.
    pub devices: Vec<DeviceId>,
    pub copies: Vec<TaskCopy>,
    /// Absolute start time (instance start plus earlier stage latencies).
    pub start: f64,
    /// Primary copy's latency.
    pub latency: f64,
    /// Combined failure probability over all copies.
    pub failure_prob: f64,
    /// Primary's weighted score before replication; `None` for baselines.
    pub initial_score: Option<f64>,
    pub final_score: Option<f64>,
    pub replication: Vec<ReplicaStep>,
}

impl Placement {
    pub fn primary(&self) -> DeviceId {
        self.devices[0]
    }

    pub fn finish(&self) -> f64 {
        self.start + self.latency
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleResult {
    /// In scheduling order: stage by stage, declaration order within a stage.
    pub placements: Vec<Placement>,
    pub stage_latencies: Vec<f64>,
    pub total_latency: f64,
    pub app_failure_prob: f64,
    /// Latency divisor used in the weighted score; `None` for baselines.
    pub latency_norm: Option<f64>,
}

impl ScheduleResult {
    pub fn placement(&self, node: NodeId) -> Option<&Placement> {
        self.placements.iter().find(|p| p.node == node)
    }

    pub fn copies(&self) -> usize {
        self.placements.iter().map(|p| p.copies.len()).sum()
    }
}
