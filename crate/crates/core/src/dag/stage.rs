use std::collections::{HashMap, VecDeque};

use super::{AppDag, DagError, NodeId, TaskNode};

/// A validated DAG split into stages by longest-path depth.
///
/// Every source node sits in stage 0; a node's stage is the edge count of the
/// longest path reaching it. Within a stage nodes keep declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct StagedDag {
    dag: AppDag,
    stages: Vec<Vec<NodeId>>,
    stage_of: HashMap<NodeId, usize>,
    // Positional mirrors of the above, used on the scheduling hot path.
    stage_positions: Vec<Vec<usize>>,
    pred_positions: Vec<Vec<usize>>,
}

impl StagedDag {
    pub fn dag(&self) -> &AppDag {
        &self.dag
    }

    pub fn stages(&self) -> &[Vec<NodeId>] {
        &self.stages
    }

    pub fn stage_of(&self, node: NodeId) -> Option<usize> {
        self.stage_of.get(&node).copied()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.stages.iter().map(Vec::len).collect()
    }

    pub fn into_dag(self) -> AppDag {
        self.dag
    }

    /// Node positions (indices into `dag().nodes`) grouped by stage.
    pub fn stage_positions(&self) -> &[Vec<usize>] {
        &self.stage_positions
    }

    /// Predecessor positions of the node at `pos`.
    pub fn predecessor_positions(&self, pos: usize) -> &[usize] {
        &self.pred_positions[pos]
    }

    pub fn node_at(&self, pos: usize) -> &TaskNode {
        &self.dag.nodes[pos]
    }
}

/// Stages a DAG with a Kahn-style breadth-first pass that keeps, for each
/// node, the longest distance from any source.
pub fn stagerize(dag: &AppDag) -> Result<StagedDag, DagError> {
    dag.validate()?;
    let index = dag.index_of();
    let succ = dag.successors(&index);
    let n = dag.nodes.len();

    let mut indegree: Vec<usize> = dag.nodes.iter().map(|v| v.predecessors.len()).collect();
    let mut depth = vec![0usize; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    while let Some(v) = queue.pop_front() {
        for &w in &succ[v] {
            depth[w] = depth[w].max(depth[v] + 1);
            indegree[w] -= 1;
            if indegree[w] == 0 {
                queue.push_back(w);
            }
        }
    }

    let n_stages = depth.iter().max().map_or(0, |d| d + 1);
    let mut stage_positions = vec![Vec::new(); n_stages];
    for (pos, &d) in depth.iter().enumerate() {
        stage_positions[d].push(pos);
    }
    let stages = stage_positions
        .iter()
        .map(|s| s.iter().map(|&p| dag.nodes[p].id).collect())
        .collect();
    let stage_of = dag
        .nodes
        .iter()
        .zip(&depth)
        .map(|(node, &d)| (node.id, d))
        .collect();
    let pred_positions = dag
        .nodes
        .iter()
        .map(|node| node.predecessors.iter().map(|p| index[p]).collect())
        .collect();

    Ok(StagedDag {
        dag: dag.clone(),
        stages,
        stage_of,
        stage_positions,
        pred_positions,
    })
}
