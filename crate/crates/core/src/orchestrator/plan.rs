use crate::dag::{StagedDag, TaskType};
use crate::device::{DeviceId, Fleet};

use super::{
    app_failure_prob, candidate_latency, LatencyBreakdown, Placement, ReplicaStep, ScheduleError, ScheduleResult,
    TaskCopy,
};

/// Bookkeeping shared by every scheduler while one instance is placed:
/// stage offsets, primary devices so far, and the placements made.
pub(crate) struct InstancePlan<'a> {
    staged: &'a StagedDag,
    bandwidth_mbps: f64,
    now: f64,
    primary: Vec<Option<DeviceId>>,
    placements: Vec<Placement>,
    stage_latencies: Vec<f64>,
    stage_offset: f64,
    stage_max: f64,
}

impl<'a> InstancePlan<'a> {
    pub fn new(staged: &'a StagedDag, bandwidth_mbps: f64, now: f64) -> Self {
        Self {
            staged,
            bandwidth_mbps,
            now,
            primary: vec![None; staged.dag().len()],
            placements: Vec::with_capacity(staged.dag().len()),
            stage_latencies: Vec::with_capacity(staged.stages().len()),
            stage_offset: 0.0,
            stage_max: 0.0,
        }
    }

    pub fn task(&self, pos: usize) -> &'a TaskType {
        let dag = self.staged.dag();
        dag.task_type(dag.nodes[pos].task_type)
            .expect("validated dag has every task type")
    }

    pub fn latency_on(
        &self,
        fleet: &Fleet,
        pos: usize,
        device: DeviceId,
    ) -> Result<Option<LatencyBreakdown>, ScheduleError> {
        candidate_latency(
            self.staged,
            pos,
            fleet.profile(device),
            fleet.state(device),
            &self.primary,
            self.bandwidth_mbps,
        )
    }

    /// Feasible alive devices with their latency, in device-id order.
    pub fn candidates(
        &self,
        fleet: &Fleet,
        pos: usize,
    ) -> Result<Vec<(DeviceId, LatencyBreakdown)>, ScheduleError> {
        let mut out = Vec::with_capacity(fleet.len());
        for d in fleet.alive() {
            if let Some(l) = self.latency_on(fleet, pos, d)? {
                out.push((d, l));
            }
        }
        Ok(out)
    }

    /// Probability that `device` leaves before a copy taking `latency`
    /// seconds in the current stage finishes. The window runs from the
    /// scheduling instant, since the copy holds its reservation from then.
    pub fn failure_on(&self, fleet: &Fleet, device: DeviceId, latency: f64) -> Result<f64, ScheduleError> {
        Ok(fleet
            .profile(device)
            .task_failure_prob(self.stage_offset + latency)?)
    }

    /// Makes the task resident on `device` and reserves a slot for it.
    pub fn commit(&self, fleet: &mut Fleet, pos: usize, device: DeviceId) -> Result<(), ScheduleError> {
        let task = self.task(pos);
        let (profile, state) = fleet.device_mut(device);
        state.cache_model(task, profile)?;
        state.reserve(task.id)?;
        Ok(())
    }

    pub fn record(
        &mut self,
        pos: usize,
        copies: Vec<TaskCopy>,
        initial_score: Option<f64>,
        final_score: Option<f64>,
        replication: Vec<ReplicaStep>,
    ) {
        let node = &self.staged.dag().nodes[pos];
        let latency = copies[0].latency;
        let failure_prob = copies.iter().map(|c| c.failure_prob).product();
        self.primary[pos] = Some(copies[0].device);
        self.stage_max = self.stage_max.max(latency);
        self.placements.push(Placement {
            node: node.id,
            task_type: node.task_type,
            devices: copies.iter().map(|c| c.device).collect(),
            copies,
            start: self.now + self.stage_offset,
            latency,
            failure_prob,
            initial_score,
            final_score,
            replication,
        });
    }

    pub fn end_stage(&mut self) {
        self.stage_latencies.push(self.stage_max);
        self.stage_offset += self.stage_max;
        self.stage_max = 0.0;
    }

    pub fn finish(self, latency_norm: Option<f64>) -> ScheduleResult {
        let app_failure_prob = app_failure_prob(self.placements.iter().map(|p| p.failure_prob));
        ScheduleResult {
            total_latency: self.stage_latencies.iter().sum(),
            stage_latencies: self.stage_latencies,
            placements: self.placements,
            app_failure_prob,
            latency_norm,
        }
    }
}
