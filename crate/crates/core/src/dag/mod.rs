//! Application DAGs of typed tasks and their decomposition into stages.

mod file;
pub mod oracle;
mod stage;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use file::{DagFile, DagFileError};
pub use stage::{stagerize, StagedDag};

/// Index of a task type. Doubles as the row/column index into a device's
/// interference matrix, so ids must be unique across a profile set.
pub type TaskTypeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Static description of one kind of task.
///
/// Sizes follow the units used throughout the crate: models and outputs in
/// MB, working memory in GB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskType {
    pub id: TaskTypeId,
    pub name: String,
    /// Size of the pre-trained model the task needs; 0 when none.
    #[serde(default)]
    pub model_size_mb: f64,
    /// Memory held on a device while the task type is resident (data + model).
    pub mem_required_gb: f64,
    /// Data handed to each downstream task.
    #[serde(default)]
    pub output_size_mb: f64,
    /// Fraction of one core used while running. Only LaTS looks at this.
    #[serde(default)]
    pub cpu_usage: f64,
}

impl TaskType {
    pub fn needs_model(&self) -> bool {
        self.model_size_mb > 0.0
    }

    pub fn check(&self) -> Result<(), DagError> {
        let ok = self.model_size_mb >= 0.0
            && self.mem_required_gb > 0.0
            && self.output_size_mb >= 0.0
            && (0.0..=1.0).contains(&self.cpu_usage);
        if ok {
            Ok(())
        } else {
            Err(DagError::InvalidTaskType(self.name.clone()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskNode {
    pub id: NodeId,
    pub task_type: TaskTypeId,
    #[serde(default)]
    pub predecessors: Vec<NodeId>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DagError {
    #[error("dag has no nodes")]
    EmptyDag,
    #[error("dependency cycle: {}", fmt_path(.0))]
    CycleDetected(Vec<NodeId>),
    #[error("node {node} references missing predecessor {missing}")]
    DanglingReference { node: NodeId, missing: NodeId },
    #[error("node {0} lists itself as a predecessor")]
    SelfReference(NodeId),
    #[error("node id {0} is declared twice")]
    DuplicateNode(NodeId),
    #[error("node {node} uses unknown task type {task_type}")]
    UnknownTaskType { node: NodeId, task_type: TaskTypeId },
    #[error("task type id {0} is declared twice")]
    DuplicateTaskType(TaskTypeId),
    #[error("task type {0:?} has out-of-range sizes or cpu usage")]
    InvalidTaskType(String),
}

fn fmt_path(path: &[NodeId]) -> String {
    path.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" -> ")
}

/// An application: a task-type table plus nodes in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct AppDag {
    pub name: String,
    pub task_types: Vec<TaskType>,
    pub nodes: Vec<TaskNode>,
}

impl AppDag {
    pub fn new(name: impl Into<String>, task_types: Vec<TaskType>, nodes: Vec<TaskNode>) -> Self {
        Self {
            name: name.into(),
            task_types,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn task_type(&self, id: TaskTypeId) -> Option<&TaskType> {
        self.task_types.iter().find(|t| t.id == id)
    }

    pub fn node(&self, id: NodeId) -> Option<&TaskNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub(crate) fn index_of(&self) -> HashMap<NodeId, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect()
    }

    /// Successor lists by node position, following declaration order.
    pub(crate) fn successors(&self, index: &HashMap<NodeId, usize>) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.nodes.len()];
        for (v, node) in self.nodes.iter().enumerate() {
            for p in &node.predecessors {
                succ[index[p]].push(v);
            }
        }
        succ
    }

    /// Checks references, task types and acyclicity.
    pub fn validate(&self) -> Result<(), DagError> {
        if self.nodes.is_empty() {
            return Err(DagError::EmptyDag);
        }
        let mut type_ids = HashSet::new();
        for t in &self.task_types {
            if !type_ids.insert(t.id) {
                return Err(DagError::DuplicateTaskType(t.id));
            }
            t.check()?;
        }
        let mut index = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if index.insert(node.id, i).is_some() {
                return Err(DagError::DuplicateNode(node.id));
            }
        }
        for node in &self.nodes {
            if !type_ids.contains(&node.task_type) {
                return Err(DagError::UnknownTaskType {
                    node: node.id,
                    task_type: node.task_type,
                });
            }
            for p in &node.predecessors {
                if *p == node.id {
                    return Err(DagError::SelfReference(node.id));
                }
                if !index.contains_key(p) {
                    return Err(DagError::DanglingReference {
                        node: node.id,
                        missing: *p,
                    });
                }
            }
        }
        if let Some(cycle) = self.find_cycle(&index) {
            return Err(DagError::CycleDetected(cycle));
        }
        Ok(())
    }

    /// Iterative three-colour DFS; returns one cycle if any exists.
    fn find_cycle(&self, index: &HashMap<NodeId, usize>) -> Option<Vec<NodeId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let succ = self.successors(index);
        let mut mark = vec![Mark::White; self.nodes.len()];
        let mut parent = vec![usize::MAX; self.nodes.len()];
        for root in 0..self.nodes.len() {
            if mark[root] != Mark::White {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            mark[root] = Mark::Grey;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if let Some(&w) = succ[v].get(*next) {
                    *next += 1;
                    match mark[w] {
                        Mark::White => {
                            mark[w] = Mark::Grey;
                            parent[w] = v;
                            stack.push((w, 0));
                        }
                        Mark::Grey => {
                            let mut cycle = vec![self.nodes[w].id];
                            let mut u = v;
                            let mut back = Vec::new();
                            while u != w {
                                back.push(self.nodes[u].id);
                                u = parent[u];
                            }
                            cycle.extend(back.into_iter().rev());
                            cycle.push(self.nodes[w].id);
                            return Some(cycle);
                        }
                        Mark::Black => {}
                    }
                } else {
                    mark[v] = Mark::Black;
                    stack.pop();
                }
            }
        }
        None
    }
}
