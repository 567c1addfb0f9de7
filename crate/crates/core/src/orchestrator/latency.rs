use crate::dag::{StagedDag, TaskType};
use crate::device::{DeviceId, DeviceProfile, DeviceState};

use super::ScheduleError;

/// Seconds to push `size_mb` over a `bandwidth_mbps` link.
fn transfer_secs(size_mb: f64, bandwidth_mbps: f64) -> f64 {
    size_mb * 8.0 / bandwidth_mbps
}

/// Zero when the task needs no model or the device already holds it.
pub fn model_upload_latency(task: &TaskType, state: &DeviceState, bandwidth_mbps: f64) -> f64 {
    if !task.needs_model() || state.is_cached(task.id) {
        0.0
    } else {
        transfer_secs(task.model_size_mb, bandwidth_mbps)
    }
}

/// Input transfer time for the node at `pos` if it runs on `device`: one
/// transfer per predecessor whose primary copy ran elsewhere.
///
/// `primary[p]` is the primary device of the node at position `p`, if placed.
pub fn data_transfer_latency(
    staged: &StagedDag,
    pos: usize,
    device: DeviceId,
    primary: &[Option<DeviceId>],
    bandwidth_mbps: f64,
) -> Result<f64, ScheduleError> {
    let dag = staged.dag();
    let mut total = 0.0;
    for &p in staged.predecessor_positions(pos) {
        let placed = primary[p].ok_or(ScheduleError::UnplacedPredecessor {
            node: dag.nodes[pos].id,
            predecessor: dag.nodes[p].id,
        })?;
        if placed != device {
            let out = dag
                .task_type(dag.nodes[p].task_type)
                .map_or(0.0, |t| t.output_size_mb);
            total += transfer_secs(out, bandwidth_mbps);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyBreakdown {
    pub exec: f64,
    pub upload: f64,
    pub transfer: f64,
}

impl LatencyBreakdown {
    pub fn total(&self) -> f64 {
        self.exec + self.upload + self.transfer
    }
}

/// End-to-end latency of the node at `pos` on one device, or `None` when the
/// device is gone or cannot make room for the task even after eviction.
pub fn candidate_latency(
    staged: &StagedDag,
    pos: usize,
    profile: &DeviceProfile,
    state: &DeviceState,
    primary: &[Option<DeviceId>],
    bandwidth_mbps: f64,
) -> Result<Option<LatencyBreakdown>, ScheduleError> {
    let node = staged.node_at(pos);
    let task = staged
        .dag()
        .task_type(node.task_type)
        .expect("validated dag has every task type");
    if !state.is_alive()
        || task.mem_required_gb > profile.memory_total_gb
        || !state.can_host(task)
    {
        return Ok(None);
    }
    Ok(Some(LatencyBreakdown {
        exec: profile.estimate_exec_latency(state, task.id)?,
        upload: model_upload_latency(task, state, bandwidth_mbps),
        transfer: data_transfer_latency(staged, pos, profile.id, primary, bandwidth_mbps)?,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::{stagerize, AppDag, NodeId, TaskNode};
    use crate::device::InterferenceMatrix;

    fn types() -> Vec<TaskType> {
        vec![
            TaskType {
                id: 0,
                name: "src".into(),
                model_size_mb: 0.0,
                mem_required_gb: 1.0,
                output_size_mb: 10.0,
                cpu_usage: 0.5,
            },
            TaskType {
                id: 1,
                name: "clf".into(),
                model_size_mb: 100.0,
                mem_required_gb: 2.0,
                output_size_mb: 1.0,
                cpu_usage: 0.5,
            },
        ]
    }

    // two sources feeding one classifier
    fn staged() -> StagedDag {
        let nodes = vec![
            TaskNode { id: NodeId(0), task_type: 0, predecessors: vec![] },
            TaskNode { id: NodeId(1), task_type: 0, predecessors: vec![] },
            TaskNode { id: NodeId(2), task_type: 1, predecessors: vec![NodeId(0), NodeId(1)] },
        ];
        stagerize(&AppDag::new("t", types(), nodes)).unwrap()
    }

    fn profile(id: DeviceId, memory: f64) -> DeviceProfile {
        DeviceProfile {
            id,
            class_name: "x".into(),
            cores: 4,
            memory_total_gb: memory,
            lambda: 0.0,
            interference: InterferenceMatrix::new(
                vec![vec![0.5, 0.25], vec![0.75, 1.0]],
                vec![vec![2.0, 2.0], vec![3.0, 3.0]],
            )
            .unwrap(),
            is_ped: false,
        }
    }

    #[test]
    fn upload_depends_on_cache() {
        let p = profile(0, 8.0);
        let mut s = DeviceState::new(&p);
        let clf = &types()[1];
        assert_eq!(model_upload_latency(clf, &s, 100.0), 8.0);
        s.cache_model(clf, &p).unwrap();
        assert_eq!(model_upload_latency(clf, &s, 100.0), 0.0);
        assert_eq!(model_upload_latency(&types()[0], &DeviceState::new(&p), 100.0), 0.0);
    }

    #[test]
    fn transfer_counts_remote_predecessors() {
        let st = staged();
        assert_eq!(data_transfer_latency(&st, 0, 0, &[None, None, None], 80.0).unwrap(), 0.0);
        let both_remote = [Some(1), Some(2), None];
        assert_eq!(data_transfer_latency(&st, 2, 0, &both_remote, 80.0).unwrap(), 2.0);
        let one_local = [Some(0), Some(2), None];
        assert_eq!(data_transfer_latency(&st, 2, 0, &one_local, 80.0).unwrap(), 1.0);
        assert_eq!(
            data_transfer_latency(&st, 2, 0, &[Some(0), None, None], 80.0),
            Err(ScheduleError::UnplacedPredecessor {
                node: NodeId(2),
                predecessor: NodeId(1)
            })
        );
    }

    #[test]
    fn candidate_composes_terms() {
        let st = staged();
        let p = profile(0, 8.0);
        let mut s = DeviceState::new(&p);
        let c = candidate_latency(&st, 0, &p, &s, &[None; 3], 100.0).unwrap().unwrap();
        assert_eq!(c.total(), 2.0);

        for _ in 0..3 {
            s.reserve(1).unwrap();
        }
        let c = candidate_latency(&st, 2, &p, &s, &[Some(1), Some(1), None], 100.0)
            .unwrap()
            .unwrap();
        assert_eq!(c.exec, 3.0 + 3.0 * 1.0);
        assert_eq!(c.upload, 8.0);
        assert_eq!(c.transfer, 1.6);
        assert_eq!(c.total(), 3.0 + 3.0 + 8.0 + 1.6);
    }

    #[test]
    fn oversize_and_departed_are_infeasible() {
        let st = staged();
        let small = profile(0, 1.5);
        let s = DeviceState::new(&small);
        let prim = [Some(0), Some(0), None];
        assert_eq!(candidate_latency(&st, 2, &small, &s, &prim, 100.0).unwrap(), None);
        let p = profile(0, 8.0);
        let mut s = DeviceState::new(&p);
        s.depart(1.0);
        assert_eq!(candidate_latency(&st, 0, &p, &s, &prim, 100.0).unwrap(), None);
    }
}
