use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::dag::StagedDag;
use crate::device::{DeviceId, Fleet};

use super::{
    weighted_score, InstancePlan, LatencyNorm, OrchestratorParams, ReplicaStep, ScheduleError,
    ScheduleResult, TaskCopy,
};

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    latency: f64,
    failure: f64,
    device: DeviceId,
}

// Min-heap order under `Reverse`: lower score first, then lower device id.
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then(self.device.cmp(&other.device))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

/// Places every task of `staged` on `fleet`, stage by stage.
///
/// For each task every alive device is scored with
/// `alpha * L / norm + (1 - alpha) * F` and queued; the best becomes the
/// primary. While the combined failure probability is at least `beta` and
/// fewer than `gamma` replicas exist, the next queued device is tried as a
/// replica and kept only if it does not worsen the score. Chosen devices get
/// the task's model cached and a running reservation.
///
/// The fleet is only modified when the whole instance can be placed.
pub fn schedule_instance(
    staged: &StagedDag,
    fleet: &mut Fleet,
    params: &OrchestratorParams,
    now: f64,
) -> Result<ScheduleResult, ScheduleError> {
    params.check()?;
    let norm = match params.latency_norm {
        LatencyNorm::Fixed(x) => x,
        LatencyNorm::Greedy => {
            let greedy = OrchestratorParams {
                alpha: 1.0,
                gamma: 0,
                ..*params
            };
            let mut dry = fleet.clone();
            place(staged, &mut dry, &greedy, 1.0, now)?.total_latency
        }
    };
    let mut work = fleet.clone();
    let result = place(staged, &mut work, params, norm, now)?;
    *fleet = work;
    Ok(result)
}

fn place(
    staged: &StagedDag,
    fleet: &mut Fleet,
    params: &OrchestratorParams,
    norm: f64,
    now: f64,
) -> Result<ScheduleResult, ScheduleError> {
    let alpha = params.alpha;
    let mut plan = InstancePlan::new(staged, params.bandwidth_mbps, now);
    for stage in staged.stage_positions() {
        for &pos in stage {
            let mut queue = BinaryHeap::with_capacity(fleet.len());
            for (device, breakdown) in plan.candidates(fleet, pos)? {
                let latency = breakdown.total();
                let failure = plan.failure_on(fleet, device, latency)?;
                queue.push(Reverse(Candidate {
                    score: weighted_score(latency, failure, alpha, norm),
                    latency,
                    failure,
                    device,
                }));
            }
            let Some(Reverse(best)) = queue.pop() else {
                return Err(ScheduleError::NoFeasibleDevice(staged.node_at(pos).id));
            };
            plan.commit(fleet, pos, best.device)?;

            let mut copies = vec![TaskCopy {
                device: best.device,
                latency: best.latency,
                failure_prob: best.failure,
            }];
            let mut combined = best.failure;
            let mut score = best.score;
            let mut steps = Vec::new();
            while combined >= params.beta && (copies.len() - 1) < params.gamma as usize {
                let Some(Reverse(next)) = queue.pop() else {
                    break;
                };
                let trial = combined * next.failure;
                let trial_score = weighted_score(next.latency, trial, alpha, norm);
                let accepted = trial_score <= score;
                steps.push(ReplicaStep {
                    device: next.device,
                    latency: next.latency,
                    combined_failure: trial,
                    score: trial_score,
                    accepted,
                });
                if !accepted {
                    break;
                }
                plan.commit(fleet, pos, next.device)?;
                copies.push(TaskCopy {
                    device: next.device,
                    latency: next.latency,
                    failure_prob: next.failure,
                });
                combined = trial;
                score = trial_score;
            }
            plan.record(pos, copies, Some(best.score), Some(score), steps);
        }
        plan.end_stage();
    }
    Ok(plan.finish(Some(norm)))
}
