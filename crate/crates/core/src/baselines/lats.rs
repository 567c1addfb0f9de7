use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::dag::{TaskType, TaskTypeId};
use crate::device::{DeviceProfile, DeviceState};
use crate::orchestrator::ScheduleError;

const DEFAULT_LATS: &str = include_str!("../../data/lats.csv");

#[derive(Debug, Error)]
pub enum LatsFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed LaTS model file: {0}")]
    Csv(#[from] csv::Error),
    #[error("non-finite coefficient for class {0:?}, task type {1}")]
    NonFinite(String, TaskTypeId),
}

#[derive(Debug, Deserialize)]
struct Row {
    device_class: String,
    task_type: TaskTypeId,
    slope: f64,
    intercept: f64,
}

/// Per (device class, task type) linear fit of ln(latency) against the
/// device's CPU usage fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct LatsModel {
    rows: BTreeMap<(String, TaskTypeId), (f64, f64)>,
    /// CPU share of one core used by each task type, indexed by type id.
    cpu_usage: Vec<f64>,
}

impl LatsModel {
    pub fn new(cpu_usage: Vec<f64>) -> Self {
        Self {
            rows: BTreeMap::new(),
            cpu_usage,
        }
    }

    pub fn with_catalog(catalog: &[TaskType]) -> Self {
        let n = catalog.iter().map(|t| t.id + 1).max().unwrap_or(0);
        let mut cpu = vec![0.0; n];
        for t in catalog {
            cpu[t.id] = t.cpu_usage;
        }
        Self::new(cpu)
    }

    pub fn insert(&mut self, class: &str, task: TaskTypeId, slope: f64, intercept: f64) {
        self.rows.insert((class.to_string(), task), (slope, intercept));
    }

    pub fn row(&self, class: &str, task: TaskTypeId) -> Option<(f64, f64)> {
        self.rows.get(&(class.to_string(), task)).copied()
    }

    /// Reads `device_class,task_type,slope,intercept` rows.
    pub fn from_csv_str(text: &str, catalog: &[TaskType]) -> Result<Self, LatsFileError> {
        let mut model = Self::with_catalog(catalog);
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for row in reader.deserialize() {
            let row: Row = row?;
            if !row.slope.is_finite() || !row.intercept.is_finite() {
                return Err(LatsFileError::NonFinite(row.device_class, row.task_type));
            }
            model.insert(&row.device_class, row.task_type, row.slope, row.intercept);
        }
        Ok(model)
    }

    pub fn load(path: &Path, catalog: &[TaskType]) -> Result<Self, LatsFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| LatsFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv_str(&text, catalog)
    }

    pub fn default_with(catalog: &[TaskType]) -> Self {
        Self::from_csv_str(DEFAULT_LATS, catalog).expect("bundled LaTS model parses")
    }

    /// Weighted running-task count over cores, clamped to one.
    pub fn cpu_usage(&self, profile: &DeviceProfile, state: &DeviceState) -> f64 {
        let busy: f64 = state
            .running()
            .iter()
            .enumerate()
            .map(|(t, &k)| f64::from(k) * self.cpu_usage.get(t).copied().unwrap_or(0.0))
            .sum();
        (busy / f64::from(profile.cores)).min(1.0)
    }

    /// `exp(slope * u + intercept)` at the device's current usage `u`.
    pub fn predict(
        &self,
        profile: &DeviceProfile,
        state: &DeviceState,
        task: TaskTypeId,
    ) -> Result<f64, ScheduleError> {
        let (slope, intercept) =
            self.row(&profile.class_name, task)
                .ok_or_else(|| ScheduleError::MissingModelRow {
                    class: profile.class_name.clone(),
                    task_type: task,
                })?;
        Ok((slope * self.cpu_usage(profile, state) + intercept).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workloads::default_catalog;

    #[test]
    fn bundled_model_covers_catalog() {
        let catalog = default_catalog();
        let model = LatsModel::default_with(&catalog);
        for class in 0..8 {
            for t in &catalog {
                let (slope, _) = model.row(&format!("ED{class}"), t.id).unwrap();
                assert!(slope > 0.0);
            }
        }
    }

    #[test]
    fn rejects_garbage() {
        let catalog = default_catalog();
        assert!(LatsModel::from_csv_str("device_class,task_type,slope,intercept\nED0,x,1,2\n", &catalog).is_err());
    }
}
