//! Exhaustive longest-path oracle, used to cross-check [`super::stagerize`].

use std::collections::HashMap;

use thiserror::Error;

use super::{AppDag, DagError, NodeId};

pub const ORACLE_MAX_NODES: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("oracle enumerates every path and accepts at most {ORACLE_MAX_NODES} nodes, got {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Invalid(#[from] DagError),
}

/// Enumerates every path from every source node by plain DFS and records,
/// for each node, the largest edge count seen on arrival.
pub fn stage_oracle(dag: &AppDag) -> Result<HashMap<NodeId, usize>, OracleError> {
    if dag.nodes.len() > ORACLE_MAX_NODES {
        return Err(OracleError::TooLarge(dag.nodes.len()));
    }
    dag.validate()?;

    let mut children: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for node in &dag.nodes {
        for p in &node.predecessors {
            children.entry(*p).or_default().push(node.id);
        }
    }

    fn walk(
        v: NodeId,
        len: usize,
        children: &HashMap<NodeId, Vec<NodeId>>,
        best: &mut HashMap<NodeId, usize>,
    ) {
        let slot = best.entry(v).or_insert(0);
        *slot = (*slot).max(len);
        if let Some(next) = children.get(&v) {
            for &w in next {
                walk(w, len + 1, children, best);
            }
        }
    }

    let mut best = HashMap::new();
    for node in dag.nodes.iter().filter(|n| n.predecessors.is_empty()) {
        walk(node.id, 0, &children, &mut best);
    }
    Ok(best)
}
