//! Seeded discrete-event simulation of application arrivals, task
//! execution and device departures over repeated cycles.

mod engine;
mod metrics;
mod sweep;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::baselines::LatsModel;
use crate::dag::StagedDag;
use crate::device::{DeviceError, DeviceId, DeviceProfile, Fleet};
use crate::orchestrator::{OrchestratorParams, ScheduleError};
use crate::scheduler::SchedulerKind;

pub use engine::run;
pub use metrics::{
    write_instances_csv, write_load_csv, write_summary_csv, InstanceRecord, LoadSample, RunMetrics,
    SummaryRow, SUMMARY_SCHEMA_VERSION,
};
pub use sweep::{sweep, sweep_point, write_sweep_csv, SweepParam, SweepRow};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// One application in the workload mix.
#[derive(Debug, Clone)]
pub struct WorkloadItem {
    pub dag: StagedDag,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub seed: u64,
    pub cycle_length_s: f64,
    pub n_cycles: u32,
    pub instances_per_cycle: u32,
    pub arrival_window_s: f64,
    pub profiles: Vec<DeviceProfile>,
    /// Label carried into the metrics, e.g. the availability scenario name.
    pub scenario: String,
    pub scheduler: SchedulerKind,
    pub params: OrchestratorParams,
    pub workload: Vec<WorkloadItem>,
    /// Needed only by the LaTS baseline.
    pub lats: Option<LatsModel>,
    /// Keep the per-device load time series.
    pub record_load: bool,
}

impl SimConfig {
    /// Defaults of 20 cycles of 15 s with 1000 instances arriving in the
    /// first 1.5 s of each.
    pub fn new(profiles: Vec<DeviceProfile>, workload: Vec<WorkloadItem>, scheduler: SchedulerKind) -> Self {
        Self {
            seed: 0,
            cycle_length_s: 15.0,
            n_cycles: 20,
            instances_per_cycle: 1000,
            arrival_window_s: 1.5,
            profiles,
            scenario: String::new(),
            scheduler,
            params: OrchestratorParams::default(),
            workload,
            lats: None,
            record_load: false,
        }
    }

    pub fn check(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::ConfigInvalid(m.to_string()));
        if !(self.cycle_length_s > 0.0 && self.cycle_length_s.is_finite()) {
            return bad("cycle_length_s must be positive");
        }
        if !(self.arrival_window_s >= 0.0 && self.arrival_window_s <= self.cycle_length_s) {
            return bad("arrival_window_s must lie in [0, cycle_length_s]");
        }
        if self.n_cycles == 0 || self.instances_per_cycle == 0 {
            return bad("n_cycles and instances_per_cycle must be at least 1");
        }
        if self.profiles.is_empty() {
            return bad("fleet is empty");
        }
        if self.workload.is_empty() {
            return bad("workload is empty");
        }
        if self.workload.iter().any(|w| !(w.weight > 0.0 && w.weight.is_finite())) {
            return bad("workload weights must be positive");
        }
        if self.scheduler == SchedulerKind::Baseline(crate::baselines::BaselineKind::Lats) && self.lats.is_none() {
            return bad("the lats scheduler needs a LaTS model");
        }
        self.params.check()?;
        Ok(())
    }
}

/// Departure offsets drawn from each device's exponential lifetime. Devices
/// with zero rate never leave; draws at or beyond `horizon` are dropped.
pub fn sample_departures<R: Rng + ?Sized>(fleet: &Fleet, rng: &mut R, horizon: f64) -> Vec<(DeviceId, f64)> {
    let mut out = Vec::new();
    for p in fleet.profiles() {
        if p.lambda <= 0.0 {
            continue;
        }
        let t = Exp::new(p.lambda).expect("positive rate").sample(rng);
        if t < horizon {
            out.push((p.id, t));
        }
    }
    out
}
