use std::io::Write;

use serde::Serialize;

use crate::device::DeviceId;

/// Bumped whenever the summary CSV columns change.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRecord {
    pub cycle: u32,
    pub instance: u64,
    pub workload: String,
    pub arrival_s: f64,
    /// False when no feasible placement existed at arrival.
    pub scheduled: bool,
    pub success: bool,
    /// Planned end-to-end latency; empty when not scheduled.
    pub latency_s: Option<f64>,
    /// Analytical failure probability; 1 when not scheduled.
    pub pf_analytical: f64,
    pub copies: u32,
    pub failed_copies: u32,
}

/// Running-task count on one device right after an event changed it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadSample {
    pub time_s: f64,
    pub device: DeviceId,
    pub running: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub scheduler: String,
    pub scenario: String,
    pub seed: u64,
    pub instances: u64,
    /// Instances that lost a task, plus those that could not be scheduled.
    pub failed: u64,
    pub rejected: u64,
    /// Mean planned latency of successful instances; NaN if there are none.
    pub avg_service_time_s: f64,
    pub avg_pf_empirical: f64,
    pub avg_pf_analytical: f64,
    pub copies_placed: u64,
    pub copies_completed: u64,
    pub copies_failed: u64,
    pub copies_aborted: u64,
    /// Tasks placed on each device, summed over the run.
    pub device_tasks: Vec<u64>,
    pub records: Vec<InstanceRecord>,
    pub load: Vec<LoadSample>,
}

impl RunMetrics {
    /// Share of all placed copies that went to the busiest device.
    pub fn max_device_share(&self) -> f64 {
        let total: u64 = self.device_tasks.iter().sum();
        if total == 0 {
            return 0.0;
        }
        *self.device_tasks.iter().max().unwrap_or(&0) as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub schema_version: u32,
    pub scheduler: String,
    pub scenario: String,
    pub seed: u64,
    pub instances: u64,
    pub failed: u64,
    pub rejected: u64,
    pub avg_service_time_s: f64,
    pub avg_pf_empirical: f64,
    pub avg_pf_analytical: f64,
    pub max_device_share: f64,
}

impl From<&RunMetrics> for SummaryRow {
    fn from(m: &RunMetrics) -> Self {
        Self {
            schema_version: SUMMARY_SCHEMA_VERSION,
            scheduler: m.scheduler.clone(),
            scenario: m.scenario.clone(),
            seed: m.seed,
            instances: m.instances,
            failed: m.failed,
            rejected: m.rejected,
            avg_service_time_s: m.avg_service_time_s,
            avg_pf_empirical: m.avg_pf_empirical,
            avg_pf_analytical: m.avg_pf_analytical,
            max_device_share: m.max_device_share(),
        }
    }
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> csv::Result<()> {
    write_rows(w, rows)
}

pub fn write_instances_csv<W: Write>(w: W, records: &[InstanceRecord]) -> csv::Result<()> {
    write_rows(w, records)
}

pub fn write_load_csv<W: Write>(w: W, load: &[LoadSample]) -> csv::Result<()> {
    write_rows(w, load)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_csv_leaves_missing_latency_empty() {
        let rec = InstanceRecord {
            cycle: 0,
            instance: 3,
            workload: "va".into(),
            arrival_s: 0.25,
            scheduled: false,
            success: false,
            latency_s: None,
            pf_analytical: 1.0,
            copies: 0,
            failed_copies: 0,
        };
        let mut buf = Vec::new();
        write_instances_csv(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "cycle,instance,workload,arrival_s,scheduled,success,latency_s,pf_analytical,copies,failed_copies\n\
             0,3,va,0.25,false,false,,1.0,0,0\n"
        );
    }

    #[test]
    fn share_of_busiest_device() {
        let m = RunMetrics {
            scheduler: "x".into(),
            scenario: "y".into(),
            seed: 0,
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
            device_tasks: vec![1, 6, 3],
            records: vec![],
            load: vec![],
        };
        assert_eq!(m.max_device_share(), 0.6);
        assert!(SummaryRow::from(&m).schema_version >= 1);
    }
}
