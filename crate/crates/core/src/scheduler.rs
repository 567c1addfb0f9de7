//! One entry point over IBDASH and the baselines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{Baseline, BaselineKind, LatsModel};
use crate::dag::StagedDag;
use crate::device::Fleet;
use crate::orchestrator::{schedule_instance, OrchestratorParams, ScheduleError, ScheduleResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchedulerKind {
    Ibdash,
    Baseline(BaselineKind),
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 6] = [
        SchedulerKind::Ibdash,
        SchedulerKind::Baseline(BaselineKind::Random),
        SchedulerKind::Baseline(BaselineKind::RoundRobin),
        SchedulerKind::Baseline(BaselineKind::LaveaSqlf),
        SchedulerKind::Baseline(BaselineKind::Petrel),
        SchedulerKind::Baseline(BaselineKind::Lats),
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Ibdash => "ibdash",
            SchedulerKind::Baseline(b) => b.name(),
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                format!("unknown scheduler {s:?}, expected one of {}", names.join(", "))
            })
    }
}

impl Serialize for SchedulerKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for SchedulerKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A configured scheduler with whatever state it keeps across instances.
#[derive(Debug, Clone)]
pub struct Scheduler {
    kind: SchedulerKind,
    params: OrchestratorParams,
    baseline: Option<Baseline>,
}

impl Scheduler {
    /// `lats` is required for the LaTS baseline and ignored otherwise.
    pub fn new(
        kind: SchedulerKind,
        params: OrchestratorParams,
        seed: u64,
        lats: Option<LatsModel>,
    ) -> Result<Self, ScheduleError> {
        params.check()?;
        let baseline = match kind {
            SchedulerKind::Ibdash => None,
            SchedulerKind::Baseline(BaselineKind::Lats) => {
                let model = lats.ok_or_else(|| ScheduleError::InvalidParams("LaTS baseline has no model".into()))?;
                Some(Baseline::new(BaselineKind::Lats, seed).with_lats_model(model))
            }
            SchedulerKind::Baseline(b) => Some(Baseline::new(b, seed)),
        };
        Ok(Self { kind, params, baseline })
    }

    pub fn kind(&self) -> SchedulerKind {
        self.kind
    }

    pub fn params(&self) -> &OrchestratorParams {
        &self.params
    }

    pub fn schedule(&mut self, staged: &StagedDag, fleet: &mut Fleet, now: f64) -> Result<ScheduleResult, ScheduleError> {
        match &mut self.baseline {
            None => schedule_instance(staged, fleet, &self.params, now),
            Some(b) => b.schedule(staged, fleet, self.params.bandwidth_mbps, now),
        }
    }
}
