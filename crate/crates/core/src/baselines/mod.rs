//! Comparison schedulers. Each picks one device per task from the same
//! feasible set IBDASH sees and never replicates.

mod lats;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dag::{StagedDag, TaskType};
use crate::device::{DeviceId, Fleet};
use crate::orchestrator::{InstancePlan, LatencyBreakdown, ScheduleError, ScheduleResult, TaskCopy};

pub use lats::{LatsFileError, LatsModel};

/// A feasible device and the latency the task would see there.
pub type Candidate = (DeviceId, LatencyBreakdown);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Random,
    RoundRobin,
    LaveaSqlf,
    Petrel,
    Lats,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::Random,
        BaselineKind::RoundRobin,
        BaselineKind::LaveaSqlf,
        BaselineKind::Petrel,
        BaselineKind::Lats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::RoundRobin => "round_robin",
            BaselineKind::LaveaSqlf => "lavea_sqlf",
            BaselineKind::Petrel => "petrel",
            BaselineKind::Lats => "lats",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown baseline {s:?}"))
    }
}

pub fn place_random<R: Rng + ?Sized>(feasible: &[Candidate], rng: &mut R) -> Option<DeviceId> {
    if feasible.is_empty() {
        return None;
    }
    Some(feasible[rng.random_range(0..feasible.len())].0)
}

/// First feasible device at or after `cursor`, wrapping around; the cursor
/// then moves just past the chosen device.
pub fn place_round_robin(feasible: &[Candidate], n_devices: usize, cursor: &mut usize) -> Option<DeviceId> {
    let device = feasible
        .iter()
        .map(|c| c.0)
        .find(|&d| d >= *cursor)
        .or_else(|| feasible.first().map(|c| c.0))?;
    *cursor = (device + 1) % n_devices.max(1);
    Some(device)
}

/// Fewest running tasks wins; ties go to the lowest id.
pub fn place_sqlf(feasible: &[Candidate], fleet: &Fleet) -> Option<DeviceId> {
    feasible
        .iter()
        .map(|c| c.0)
        .min_by_key(|&d| (fleet.state(d).total_running(), d))
}

/// Power of two choices: the faster of two distinct uniform picks.
pub fn place_petrel<R: Rng + ?Sized>(feasible: &[Candidate], rng: &mut R) -> Option<DeviceId> {
    match feasible.len() {
        0 => None,
        1 => Some(feasible[0].0),
        n => {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let (a, b) = (&feasible[i.min(j)], &feasible[i.max(j)]);
            if b.1.total() < a.1.total() {
                Some(b.0)
            } else {
                Some(a.0)
            }
        }
    }
}

/// Lowest predicted latency under the LaTS model plus upload and transfer.
pub fn place_lats(
    feasible: &[Candidate],
    fleet: &Fleet,
    task: &TaskType,
    model: &LatsModel,
) -> Result<Option<DeviceId>, ScheduleError> {
    let mut best: Option<(f64, DeviceId)> = None;
    for (d, b) in feasible {
        let predicted = model.predict(fleet.profile(*d), fleet.state(*d), task.id)? + b.upload + b.transfer;
        if best.is_none_or(|(l, _)| predicted < l) {
            best = Some((predicted, *d));
        }
    }
    Ok(best.map(|(_, d)| d))
}

/// A baseline policy with the state it carries between instances.
#[derive(Debug, Clone)]
pub struct Baseline {
    kind: BaselineKind,
    rng: ChaCha8Rng,
    cursor: usize,
    lats: Option<LatsModel>,
}

impl Baseline {
    pub fn new(kind: BaselineKind, seed: u64) -> Self {
        Self {
            kind,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cursor: 0,
            lats: None,
        }
    }

    pub fn with_lats_model(mut self, model: LatsModel) -> Self {
        self.lats = Some(model);
        self
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Places every task of `staged`, stage by stage. The fleet is only
    /// modified when the whole instance can be placed.
    pub fn schedule(
        &mut self,
        staged: &StagedDag,
        fleet: &mut Fleet,
        bandwidth_mbps: f64,
        now: f64,
    ) -> Result<ScheduleResult, ScheduleError> {
        if !(bandwidth_mbps > 0.0) {
            return Err(ScheduleError::InvalidParams(format!("bandwidth {bandwidth_mbps}")));
        }
        let mut work = fleet.clone();
        let mut rng = self.rng.clone();
        let mut cursor = self.cursor;
        let mut plan = InstancePlan::new(staged, bandwidth_mbps, now);
        for stage in staged.stage_positions() {
            for &pos in stage {
                let feasible = plan.candidates(&work, pos)?;
                let chosen = match self.kind {
                    BaselineKind::Random => place_random(&feasible, &mut rng),
                    BaselineKind::RoundRobin => place_round_robin(&feasible, work.len(), &mut cursor),
                    BaselineKind::LaveaSqlf => place_sqlf(&feasible, &work),
                    BaselineKind::Petrel => place_petrel(&feasible, &mut rng),
                    BaselineKind::Lats => {
                        let model = self.lats.as_ref().ok_or_else(|| {
                            ScheduleError::InvalidParams("LaTS baseline has no model".into())
                        })?;
                        place_lats(&feasible, &work, plan.task(pos), model)?
                    }
                };
                let device = chosen.ok_or(ScheduleError::NoFeasibleDevice(staged.node_at(pos).id))?;
                let latency = feasible
                    .iter()
                    .find(|c| c.0 == device)
                    .map(|c| c.1.total())
                    .expect("chosen device is a candidate");
                let failure_prob = plan.failure_on(&work, device, latency)?;
                plan.commit(&mut work, pos, device)?;
                let copy = TaskCopy {
                    device,
                    latency,
                    failure_prob,
                };
                plan.record(pos, vec![copy], None, None, Vec::new());
            }
            plan.end_stage();
        }
        *fleet = work;
        self.rng = rng;
        self.cursor = cursor;
        Ok(plan.finish(None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::{stagerize, AppDag, NodeId, TaskNode};
    use crate::device::{DeviceProfile, InterferenceMatrix};

    fn task() -> TaskType {
        TaskType {
            id: 0,
            name: "t".into(),
            model_size_mb: 0.0,
            mem_required_gb: 1.0,
            output_size_mb: 1.0,
            cpu_usage: 1.0,
        }
    }

    fn device(solo: f64) -> DeviceProfile {
        DeviceProfile {
            id: 0,
            class_name: "c".into(),
            cores: 4,
            memory_total_gb: 64.0,
            lambda: 0.0,
            interference: InterferenceMatrix::new(vec![vec![0.5]], vec![vec![solo]]).unwrap(),
            is_ped: false,
        }
    }

    fn one_task() -> StagedDag {
        let nodes = vec![TaskNode {
            id: NodeId(0),
            task_type: 0,
            predecessors: vec![],
        }];
        stagerize(&AppDag::new("one", vec![task()], nodes)).unwrap()
    }

    fn cands(latencies: &[f64]) -> Vec<Candidate> {
        latencies
            .iter()
            .enumerate()
            .map(|(d, &exec)| {
                (
                    d,
                    LatencyBreakdown {
                        exec,
                        upload: 0.0,
                        transfer: 0.0,
                    },
                )
            })
            .collect()
    }

    fn run(b: &mut Baseline, fleet: &mut Fleet, n: usize) -> Vec<DeviceId> {
        let staged = one_task();
        (0..n)
            .map(|_| b.schedule(&staged, fleet, 100.0, 0.0).unwrap().placements[0].primary())
            .collect()
    }

    #[test]
    fn names_round_trip() {
        for k in BaselineKind::ALL {
            assert_eq!(k.name().parse::<BaselineKind>(), Ok(k));
        }
        assert!("fifo".parse::<BaselineKind>().is_err());
    }

    #[test]
    fn empty_set_is_infeasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fleet = Fleet::new(vec![device(1.0)]).unwrap();
        assert_eq!(place_random(&[], &mut rng), None);
        assert_eq!(place_petrel(&[], &mut rng), None);
        assert_eq!(place_sqlf(&[], &fleet), None);
        assert_eq!(place_round_robin(&[], 3, &mut 0), None);
    }

    #[test]
    fn departed_fleet_has_no_feasible_device() {
        for kind in BaselineKind::ALL {
            let mut fleet = Fleet::new(vec![device(1.0); 2]).unwrap();
            fleet.state_mut(0).depart(0.0);
            fleet.state_mut(1).depart(0.0);
            let mut b = Baseline::new(kind, 3).with_lats_model(LatsModel::with_catalog(&[task()]));
            let err = b.schedule(&one_task(), &mut fleet, 100.0, 0.0).unwrap_err();
            assert_eq!(err, ScheduleError::NoFeasibleDevice(NodeId(0)));
        }
    }

    #[test]
    fn random_single_device() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(place_random(&cands(&[1.0]), &mut rng), Some(0));
    }

    #[test]
    fn random_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let c = cands(&[1.0; 4]);
        let mut counts = [0u32; 4];
        for _ in 0..1000 {
            counts[place_random(&c, &mut rng).unwrap()] += 1;
        }
        let sigma = (1000.0 * 0.25 * 0.75f64).sqrt();
        let chi2: f64 = counts.iter().map(|&k| (f64::from(k) - 250.0).powi(2) / 250.0).sum();
        for k in counts {
            assert!((f64::from(k) - 250.0).abs() < 3.0 * sigma, "{counts:?}");
        }
        // 3 degrees of freedom, 0.999 quantile
        assert!(chi2 < 16.27, "{chi2}");
    }

    #[test]
    fn round_robin_cycles_and_skips_departed() {
        let mut fleet = Fleet::new(vec![device(1.0); 3]).unwrap();
        let mut b = Baseline::new(BaselineKind::RoundRobin, 0);
        assert_eq!(run(&mut b, &mut fleet, 6), vec![0, 1, 2, 0, 1, 2]);

        let mut fleet = Fleet::new(vec![device(1.0); 3]).unwrap();
        fleet.state_mut(1).depart(0.0);
        let mut b = Baseline::new(BaselineKind::RoundRobin, 0);
        assert_eq!(run(&mut b, &mut fleet, 4), vec![0, 2, 0, 2]);
    }

    #[test]
    fn round_robin_cursor_survives_instances() {
        let staged = {
            let nodes = (0..3)
                .map(|i| TaskNode {
                    id: NodeId(i),
                    task_type: 0,
                    predecessors: vec![],
                })
                .collect();
            stagerize(&AppDag::new("wide", vec![task()], nodes)).unwrap()
        };
        let mut fleet = Fleet::new(vec![device(1.0); 4]).unwrap();
        let mut b = Baseline::new(BaselineKind::RoundRobin, 0);
        let mut seen = Vec::new();
        for _ in 0..3 {
            let r = b.schedule(&staged, &mut fleet, 100.0, 0.0).unwrap();
            seen.extend(r.placements.iter().map(|p| p.primary()));
        }
        let expected: Vec<_> = (0..9).map(|i| i % 4).collect();
        assert_eq!(seen, expected);
        assert_eq!(seen[6], 2);
        assert_eq!(b.cursor(), 1);
    }

    #[test]
    fn sqlf_picks_shortest_queue() {
        let mut fleet = Fleet::new(vec![device(1.0); 3]).unwrap();
        for (d, load) in [3, 1, 2].into_iter().enumerate() {
            for _ in 0..load {
                fleet.state_mut(d).reserve(0).unwrap();
            }
        }
        assert_eq!(place_sqlf(&cands(&[1.0; 3]), &fleet), Some(1));
        let idle = Fleet::new(vec![device(1.0); 3]).unwrap();
        assert_eq!(place_sqlf(&cands(&[1.0; 3]), &idle), Some(0));

        let mut b = Baseline::new(BaselineKind::LaveaSqlf, 0);
        let mut fleet = Fleet::new(vec![device(1.0); 2]).unwrap();
        fleet.state_mut(0).reserve(0).unwrap();
        assert_eq!(run(&mut b, &mut fleet, 2), vec![1, 0]);
    }

    #[test]
    fn sqlf_keeps_homogeneous_fleet_balanced() {
        let mut fleet = Fleet::new(vec![device(1.0); 5]).unwrap();
        let mut b = Baseline::new(BaselineKind::LaveaSqlf, 0);
        for _ in 0..37 {
            run(&mut b, &mut fleet, 1);
            let loads: Vec<u32> = (0..5).map(|d| fleet.state(d).total_running()).collect();
            let spread = loads.iter().max().unwrap() - loads.iter().min().unwrap();
            assert!(spread <= 1, "{loads:?}");
        }
    }

    #[test]
    fn petrel_prefers_idle_and_handles_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            assert_eq!(place_petrel(&cands(&[9.0, 1.0]), &mut rng), Some(1));
        }
        assert_eq!(place_petrel(&cands(&[3.0]), &mut rng), Some(0));
    }

    #[test]
    fn petrel_matches_pairwise_closed_form() {
        // Latency rank r (0 = fastest) wins every pair it is in with a
        // slower device: (n - 1 - r) of the C(n, 2) equally likely pairs.
        let latencies = [4.0, 1.0, 3.0, 2.0];
        let c = cands(&latencies);
        let n = latencies.len();
        let pairs = (n * (n - 1) / 2) as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 10_000;
        let mut counts = [0u32; 4];
        for _ in 0..trials {
            counts[place_petrel(&c, &mut rng).unwrap()] += 1;
        }
        for (d, &l) in latencies.iter().enumerate() {
            let rank = latencies.iter().filter(|&&o| o < l).count();
            let p = (n - 1 - rank) as f64 / pairs;
            let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
            let got = f64::from(counts[d]);
            assert!((got - trials as f64 * p).abs() <= 3.0 * sigma.max(1e-9), "device {d}: {got} vs p={p}");
        }
        assert_eq!(counts[0], 0);
    }

    #[test]
    fn seeded_policies_replay() {
        for kind in [BaselineKind::Random, BaselineKind::Petrel] {
            let seq = |seed| {
                let mut fleet = Fleet::new(vec![device(1.0), device(2.0), device(3.0)]).unwrap();
                let mut b = Baseline::new(kind, seed);
                run(&mut b, &mut fleet, 40)
            };
            assert_eq!(seq(11), seq(11));
            assert_ne!(seq(11), seq(12));
        }
    }

    fn lats_model(intercepts: &[(&str, f64)]) -> LatsModel {
        let mut m = LatsModel::with_catalog(&[task()]);
        for (class, b) in intercepts {
            m.insert(class, 0, 1.0, *b);
        }
        m
    }

    fn classed(class: &str) -> DeviceProfile {
        DeviceProfile {
            class_name: class.into(),
            ..device(1.0)
        }
    }

    #[test]
    fn lats_idle_fleet_picks_smallest_intercept() {
        let fleet = Fleet::new(vec![classed("a"), classed("b"), classed("c")]).unwrap();
        let m = lats_model(&[("a", 0.5), ("b", 0.1), ("c", 0.3)]);
        assert_eq!(place_lats(&cands(&[1.0; 3]), &fleet, &task(), &m), Ok(Some(1)));
        let tie = lats_model(&[("a", 0.1), ("b", 0.1), ("c", 0.1)]);
        assert_eq!(place_lats(&cands(&[1.0; 3]), &fleet, &task(), &tie), Ok(Some(0)));
    }

    #[test]
    fn lats_load_never_makes_a_device_newly_optimal() {
        let m = lats_model(&[("a", 0.5), ("b", 0.1)]);
        let mut fleet = Fleet::new(vec![classed("a"), classed("b")]).unwrap();
        let before = place_lats(&cands(&[1.0; 2]), &fleet, &task(), &m).unwrap();
        for _ in 0..4 {
            fleet.state_mut(0).reserve(0).unwrap();
            let after = place_lats(&cands(&[1.0; 2]), &fleet, &task(), &m).unwrap();
            assert_eq!(after, before);
        }
    }

    #[test]
    fn lats_missing_row() {
        let fleet = Fleet::new(vec![classed("a"), classed("zzz")]).unwrap();
        let m = lats_model(&[("a", 5.0)]);
        assert_eq!(
            place_lats(&cands(&[1.0; 2]), &fleet, &task(), &m),
            Err(ScheduleError::MissingModelRow {
                class: "zzz".into(),
                task_type: 0
            })
        );
    }

    #[test]
    fn lats_concentrates_on_fast_device() {
        let classes = ["a", "b", "c", "fast"];
        let mut fleet = Fleet::new(classes.iter().map(|c| classed(c)).collect()).unwrap();
        let m = lats_model(&[("a", 1.0), ("b", 1.0), ("c", 1.0), ("fast", 1.0 - 3f64.ln())]);
        let mut b = Baseline::new(BaselineKind::Lats, 0).with_lats_model(m);
        let picks = run(&mut b, &mut fleet, 8);
        let fast = picks.iter().filter(|&&d| d == 3).count();
        assert!(fast * 2 > picks.len(), "{picks:?}");
    }

    #[test]
    fn baseline_records_true_latency_and_failure() {
        let mut p = device(2.0);
        p.lambda = 0.1;
        let mut fleet = Fleet::new(vec![p]).unwrap();
        let mut b = Baseline::new(BaselineKind::Random, 0);
        let r = b.schedule(&one_task(), &mut fleet, 100.0, 3.0).unwrap();
        let pl = &r.placements[0];
        assert_eq!(pl.latency, 2.0);
        assert_eq!(pl.start, 3.0);
        assert!((pl.failure_prob - (1.0 - (-0.2f64).exp())).abs() < 1e-15);
        assert_eq!(pl.devices.len(), 1);
        assert_eq!(r.latency_norm, None);
        assert_eq!(fleet.state(0).running(), &[1]);
    }
}
