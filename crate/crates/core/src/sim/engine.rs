use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, RngCore, SeedableRng};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;

use crate::device::{DeviceId, Fleet};
use crate::orchestrator::ScheduleError;
use crate::scheduler::Scheduler;

use super::{sample_departures, InstanceRecord, LoadSample, RunMetrics, SimConfig, SimError};

const DEPARTURE_STREAM: u64 = 0;
const ARRIVAL_STREAM: u64 = 1;
const MIX_STREAM: u64 = 2;
const SCHEDULER_STREAM: u64 = 3;

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    InstanceArrival(usize),
    TaskComplete(usize),
    DeviceDeparture(DeviceId),
    CycleReset,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

#[derive(Default)]
struct Queue {
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
}

impl Queue {
    fn push(&mut self, time: f64, kind: EventKind) {
        self.heap.push(Reverse(Event { time, seq: self.seq, kind }));
        self.seq += 1;
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CopyStatus {
    Live,
    Completed,
    Failed,
    Aborted,
}

struct CopyRun {
    instance: usize,
    task: usize,
    device: DeviceId,
    task_type: usize,
    finish: f64,
    status: CopyStatus,
}

struct Instance {
    record: usize,
    copies: Vec<usize>,
    surviving: Vec<u32>,
    failed: bool,
}

struct Cycle<'a> {
    fleet: &'a mut Fleet,
    queue: Queue,
    copies: Vec<CopyRun>,
    instances: Vec<Instance>,
    resident: Vec<Vec<usize>>,
    outstanding: usize,
    metrics: &'a mut RunMetrics,
    record_load: bool,
}

impl Cycle<'_> {
    fn sample(&mut self, time: f64, device: DeviceId) {
        if self.record_load {
            self.metrics.load.push(LoadSample {
                time_s: time,
                device,
                running: self.fleet.state(device).total_running(),
            });
        }
    }

    fn end_copy(&mut self, id: usize, status: CopyStatus, time: f64) -> Result<(), SimError> {
        let c = &mut self.copies[id];
        debug_assert_eq!(c.status, CopyStatus::Live);
        c.status = status;
        let (device, task_type) = (c.device, c.task_type);
        self.fleet.state_mut(device).release(task_type)?;
        self.outstanding -= 1;
        match status {
            CopyStatus::Completed => self.metrics.copies_completed += 1,
            CopyStatus::Failed => self.metrics.copies_failed += 1,
            CopyStatus::Aborted => self.metrics.copies_aborted += 1,
            CopyStatus::Live => unreachable!(),
        }
        self.sample(time, device);
        Ok(())
    }

    fn depart(&mut self, device: DeviceId, time: f64) -> Result<(), SimError> {
        self.fleet.state_mut(device).depart(time);
        let resident = std::mem::take(&mut self.resident[device]);
        for id in resident {
            let c = &self.copies[id];
            if c.status != CopyStatus::Live || c.finish <= time {
                continue;
            }
            let (inst, task) = (c.instance, c.task);
            self.end_copy(id, CopyStatus::Failed, time)?;
            let instance = &mut self.instances[inst];
            self.metrics.records[instance.record].failed_copies += 1;
            instance.surviving[task] -= 1;
            if instance.surviving[task] == 0 && !instance.failed {
                instance.failed = true;
                let others = instance.copies.clone();
                for other in others {
                    if self.copies[other].status == CopyStatus::Live {
                        self.end_copy(other, CopyStatus::Aborted, time)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs every cycle of `config` and aggregates the metrics.
///
/// Each cycle starts from a fresh fleet, draws one exponential departure
/// time per device and a batch of arrivals uniform over the arrival window.
/// A copy fails if its device leaves before the copy's planned finish; an
/// instance fails as soon as one of its tasks has no surviving copy, and its
/// other copies are then aborted. A cycle ends once it has drained, or at its
/// nominal length if that is later.
pub fn run(config: &SimConfig) -> Result<RunMetrics, SimError> {
    config.check()?;
    let mut fleet = Fleet::new(config.profiles.clone())?;
    let mut departures_rng = stream(config.seed, DEPARTURE_STREAM);
    let mut arrivals_rng = stream(config.seed, ARRIVAL_STREAM);
    let mut mix_rng = stream(config.seed, MIX_STREAM);
    let scheduler_seed = stream(config.seed, SCHEDULER_STREAM).next_u64();
    let mut scheduler = Scheduler::new(config.scheduler, config.params, scheduler_seed, config.lats.clone())?;
    let mix = WeightedIndex::new(config.workload.iter().map(|w| w.weight))
        .map_err(|e| SimError::ConfigInvalid(e.to_string()))?;

    let mut metrics = RunMetrics {
        scheduler: config.scheduler.name().to_string(),
        scenario: config.scenario.clone(),
        seed: config.seed,
        instances: 0,
        failed: 0,
        rejected: 0,
        avg_service_time_s: f64::NAN,
        avg_pf_empirical: 0.0,
        avg_pf_analytical: 0.0,
        copies_placed: 0,
        copies_completed: 0,
        copies_failed: 0,
        copies_aborted: 0,
        device_tasks: vec![0; fleet.len()],
        records: Vec::new(),
        load: Vec::new(),
    };

    let mut cycle_start = 0.0;
    for cycle in 0..config.n_cycles {
        fleet.reset();
        let mut c = Cycle {
            queue: Queue::default(),
            copies: Vec::new(),
            instances: Vec::new(),
            resident: vec![Vec::new(); fleet.len()],
            outstanding: 0,
            fleet: &mut fleet,
            metrics: &mut metrics,
            record_load: config.record_load,
        };

        for (d, t) in sample_departures(c.fleet, &mut departures_rng, f64::INFINITY) {
            c.queue.push(cycle_start + t, EventKind::DeviceDeparture(d));
        }
        let mut arrivals: Vec<(f64, usize)> = (0..config.instances_per_cycle)
            .map(|_| {
                let t = cycle_start + arrivals_rng.random::<f64>() * config.arrival_window_s;
                let w = if config.workload.len() == 1 { 0 } else { mix.sample(&mut mix_rng) };
                (t, w)
            })
            .collect();
        arrivals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (i, &(t, _)) in arrivals.iter().enumerate() {
            c.queue.push(t, EventKind::InstanceArrival(i));
        }
        c.outstanding = arrivals.len();
        let reset_at = cycle_start + config.cycle_length_s;
        c.queue.push(reset_at, EventKind::CycleReset);

        let mut overrun = false;
        let mut cycle_end = reset_at;
        while let Some(ev) = c.queue.pop() {
            let now = ev.time;
            match ev.kind {
                EventKind::CycleReset => {
                    if c.outstanding == 0 {
                        break;
                    }
                    overrun = true;
                }
                EventKind::DeviceDeparture(d) => c.depart(d, now)?,
                EventKind::TaskComplete(id) => {
                    if c.copies[id].status == CopyStatus::Live {
                        c.end_copy(id, CopyStatus::Completed, now)?;
                    }
                }
                EventKind::InstanceArrival(i) => {
                    c.outstanding -= 1;
                    let item = &config.workload[arrivals[i].1];
                    let index = c.metrics.records.len();
                    let mut record = InstanceRecord {
                        cycle,
                        instance: index as u64,
                        workload: item.dag.dag().name.clone(),
                        arrival_s: now,
                        scheduled: false,
                        success: false,
                        latency_s: None,
                        pf_analytical: 1.0,
                        copies: 0,
                        failed_copies: 0,
                    };
                    match scheduler.schedule(&item.dag, c.fleet, now) {
                        Ok(result) => {
                            record.scheduled = true;
                            record.latency_s = Some(result.total_latency);
                            record.pf_analytical = result.app_failure_prob;
                            record.copies = result.copies() as u32;
                            let inst = c.instances.len();
                            let mut instance = Instance {
                                record: index,
                                copies: Vec::with_capacity(result.copies()),
                                surviving: Vec::with_capacity(result.placements.len()),
                                failed: false,
                            };
                            let mut touched = Vec::new();
                            for (task, p) in result.placements.iter().enumerate() {
                                instance.surviving.push(p.copies.len() as u32);
                                for copy in &p.copies {
                                    let id = c.copies.len();
                                    let finish = p.start + copy.latency;
                                    c.copies.push(CopyRun {
                                        instance: inst,
                                        task,
                                        device: copy.device,
                                        task_type: p.task_type,
                                        finish,
                                        status: CopyStatus::Live,
                                    });
                                    c.queue.push(finish, EventKind::TaskComplete(id));
                                    c.resident[copy.device].push(id);
                                    instance.copies.push(id);
                                    c.metrics.device_tasks[copy.device] += 1;
                                    c.metrics.copies_placed += 1;
                                    c.outstanding += 1;
                                    if !touched.contains(&copy.device) {
                                        touched.push(copy.device);
                                    }
                                }
                            }
                            c.instances.push(instance);
                            for d in touched {
                                c.sample(now, d);
                            }
                        }
                        Err(ScheduleError::NoFeasibleDevice(_)) => {}
                        Err(e) => return Err(e.into()),
                    }
                    c.metrics.records.push(record);
                }
            }
            if c.outstanding == 0 && overrun {
                cycle_end = now;
                break;
            }
        }

        for inst in &c.instances {
            c.metrics.records[inst.record].success = !inst.failed;
        }
        for d in 0..c.fleet.len() {
            if c.fleet.state(d).total_running() != 0 {
                return Err(SimError::ConfigInvalid(format!("device {d} still busy at cycle end")));
            }
            if c.record_load {
                c.metrics.load.push(LoadSample {
                    time_s: cycle_end,
                    device: d,
                    running: 0,
                });
            }
        }
        cycle_start = cycle_end;
    }

    let n = metrics.records.len();
    let mut service = 0.0;
    let mut successes = 0usize;
    let mut pf = 0.0;
    for r in &metrics.records {
        pf += r.pf_analytical;
        if !r.scheduled {
            metrics.rejected += 1;
        }
        if r.success {
            successes += 1;
            service += r.latency_s.unwrap_or(0.0);
        } else {
            metrics.failed += 1;
        }
    }
    metrics.instances = n as u64;
    metrics.avg_pf_empirical = metrics.failed as f64 / n as f64;
    metrics.avg_pf_analytical = pf / n as f64;
    if successes > 0 {
        metrics.avg_service_time_s = service / successes as f64;
    }
    Ok(metrics)
}
