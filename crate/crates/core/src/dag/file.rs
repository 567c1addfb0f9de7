//! TOML definition files for applications.
//!
//! ```toml
//! name = "video_analytics"
//!
//! [[task_types]]
//! id = 6
//! name = "va_split"
//! mem_required_gb = 0.5
//! output_size_mb = 25.0
//! cpu_usage = 0.4
//!
//! [[nodes]]
//! id = 0
//! task_type = 6
//! predecessors = []
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AppDag, DagError, TaskNode, TaskType};

#[derive(Debug, Error)]
pub enum DagFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed dag definition: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid dag: {0}")]
    Invalid(#[from] DagError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DagFile {
    pub name: String,
    pub task_types: Vec<TaskType>,
    pub nodes: Vec<TaskNode>,
}

impl From<&AppDag> for DagFile {
    fn from(dag: &AppDag) -> Self {
        Self {
            name: dag.name.clone(),
            task_types: dag.task_types.clone(),
            nodes: dag.nodes.clone(),
        }
    }
}

impl AppDag {
    pub fn from_toml_str(text: &str) -> Result<Self, DagFileError> {
        let file: DagFile = toml::from_str(text)?;
        let dag = AppDag::new(file.name, file.task_types, file.nodes);
        dag.validate()?;
        Ok(dag)
    }

    pub fn load(path: &Path) -> Result<Self, DagFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| DagFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&DagFile::from(self)).expect("dag definitions always serialize")
    }
}
