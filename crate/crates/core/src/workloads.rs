//! Generators for the four benchmark applications.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dag::{AppDag, DagError, NodeId, TaskNode, TaskType, TaskTypeId};

const DEFAULT_CATALOG: &str = include_str!("../data/task_types.toml");

pub const DEFAULT_FANOUT: u32 = 4;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("fanout must be at least 1")]
    ZeroFanout,
    #[error("task type {0:?} is not in the catalog")]
    MissingTaskType(String),
    #[error("unknown workload kind {0:?}")]
    UnknownKind(String),
    #[error(transparent)]
    Invalid(#[from] DagError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    LightGbm,
    MapReduceSort,
    VideoAnalytics,
    MatrixCompute,
}

impl WorkloadKind {
    pub const ALL: [WorkloadKind; 4] = [
        WorkloadKind::LightGbm,
        WorkloadKind::MapReduceSort,
        WorkloadKind::VideoAnalytics,
        WorkloadKind::MatrixCompute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WorkloadKind::LightGbm => "light_gbm",
            WorkloadKind::MapReduceSort => "map_reduce_sort",
            WorkloadKind::VideoAnalytics => "video_analytics",
            WorkloadKind::MatrixCompute => "matrix_compute",
        }
    }

    /// Stage widths for a given fanout.
    pub fn stage_widths(self, k: usize) -> Vec<usize> {
        match self {
            WorkloadKind::LightGbm => vec![1, k, 1, 1],
            WorkloadKind::MapReduceSort => vec![k, k],
            WorkloadKind::VideoAnalytics => vec![1, k, 1],
            WorkloadKind::MatrixCompute => vec![k, k, 1],
        }
    }
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WorkloadKind {
    type Err = WorkloadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| WorkloadError::UnknownKind(s.to_string()))
    }
}

/// Replacement values for one catalog entry, matched by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskTypeOverride {
    pub name: String,
    pub model_size_mb: Option<f64>,
    pub mem_required_gb: Option<f64>,
    pub output_size_mb: Option<f64>,
    pub cpu_usage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    #[serde(default = "default_fanout")]
    pub fanout: u32,
    #[serde(default)]
    pub overrides: Vec<TaskTypeOverride>,
}

fn default_fanout() -> u32 {
    DEFAULT_FANOUT
}

impl WorkloadSpec {
    pub fn new(kind: WorkloadKind, fanout: u32) -> Self {
        Self {
            kind,
            fanout,
            overrides: Vec::new(),
        }
    }
}

#[derive(Deserialize)]
struct CatalogFile {
    task_types: Vec<TaskType>,
}

/// The bundled task-type catalog; ids match the bundled device profiles.
pub fn default_catalog() -> Vec<TaskType> {
    toml::from_str::<CatalogFile>(DEFAULT_CATALOG)
        .expect("bundled task catalog parses")
        .task_types
}

struct Builder<'a> {
    catalog: &'a [TaskType],
    used: Vec<TaskType>,
    nodes: Vec<TaskNode>,
}

impl<'a> Builder<'a> {
    fn type_id(&mut self, name: &str) -> Result<TaskTypeId, WorkloadError> {
        let t = self
            .catalog
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| WorkloadError::MissingTaskType(name.to_string()))?;
        if !self.used.iter().any(|u| u.id == t.id) {
            self.used.push(t.clone());
        }
        Ok(t.id)
    }

    fn add(&mut self, type_name: &str, predecessors: Vec<NodeId>) -> Result<NodeId, WorkloadError> {
        let task_type = self.type_id(type_name)?;
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(TaskNode {
            id,
            task_type,
            predecessors,
        });
        Ok(id)
    }
}

/// Builds the application DAG for `spec` from `catalog`.
pub fn build_with_catalog(spec: &WorkloadSpec, catalog: &[TaskType]) -> Result<AppDag, WorkloadError> {
    if spec.fanout == 0 {
        return Err(WorkloadError::ZeroFanout);
    }
    let mut catalog = catalog.to_vec();
    for o in &spec.overrides {
        let t = catalog
            .iter_mut()
            .find(|t| t.name == o.name)
            .ok_or_else(|| WorkloadError::MissingTaskType(o.name.clone()))?;
        if let Some(v) = o.model_size_mb {
            t.model_size_mb = v;
        }
        if let Some(v) = o.mem_required_gb {
            t.mem_required_gb = v;
        }
        if let Some(v) = o.output_size_mb {
            t.output_size_mb = v;
        }
        if let Some(v) = o.cpu_usage {
            t.cpu_usage = v;
        }
    }

    let k = spec.fanout as usize;
    let mut b = Builder {
        catalog: &catalog,
        used: Vec::new(),
        nodes: Vec::new(),
    };
    match spec.kind {
        WorkloadKind::LightGbm => {
            let pca = b.add("lgbm_read_pca", vec![])?;
            let trainers = (0..k)
                .map(|_| b.add("lgbm_train", vec![pca]))
                .collect::<Result<Vec<_>, _>>()?;
            let combine = b.add("lgbm_combine", trainers)?;
            b.add("lgbm_test", vec![combine])?;
        }
        WorkloadKind::MapReduceSort => {
            let mappers = (0..k)
                .map(|_| b.add("mr_map", vec![]))
                .collect::<Result<Vec<_>, _>>()?;
            for _ in 0..k {
                b.add("mr_reduce_sort", mappers.clone())?;
            }
        }
        WorkloadKind::VideoAnalytics => {
            let split = b.add("va_split", vec![])?;
            let frames = (0..k)
                .map(|_| b.add("va_extract_frame", vec![split]))
                .collect::<Result<Vec<_>, _>>()?;
            b.add("va_classify", frames)?;
        }
        WorkloadKind::MatrixCompute => {
            let inverses = (0..k)
                .map(|_| b.add("mat_inverse", vec![]))
                .collect::<Result<Vec<_>, _>>()?;
            let mut products = Vec::with_capacity(k);
            for i in 0..k {
                let mut preds = vec![inverses[i]];
                if k > 1 {
                    preds.push(inverses[(i + 1) % k]);
                }
                products.push(b.add("mat_multiply", preds)?);
            }
            b.add("mat_vector", products)?;
        }
    }
    let mut used = b.used;
    used.sort_by_key(|t| t.id);
    let dag = AppDag::new(spec.kind.name(), used, b.nodes);
    dag.validate()?;
    Ok(dag)
}

pub fn build(spec: &WorkloadSpec) -> Result<AppDag, WorkloadError> {
    build_with_catalog(spec, &default_catalog())
}
