use serde::{Deserialize, Serialize};

use super::{EdgeId, SearchGraph, VertexId};
use crate::error::{Error, Result};

/// One decision: the vertex visited and the edge taken from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub vertex: VertexId,
    pub edge: EdgeId,
}

/// A walk from the start vertex, ending at a terminal unless truncated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub final_vertex: VertexId,
    pub truncated: bool,
}

impl Trajectory {
    /// Replays `edges` from the start vertex; truncated when the walk stops
    /// short of a terminal.
    pub fn from_edges(graph: &SearchGraph, edges: &[EdgeId]) -> Result<Self> {
        let mut steps = Vec::with_capacity(edges.len());
        let mut at = graph.start();
        for &edge in edges {
            if edge.0 >= graph.num_edges() {
                return Err(Error::Trajectory(format!("{edge} does not exist")));
            }
            steps.push(Step { vertex: at, edge });
            at = graph.edge(edge).target;
        }
        let t = Trajectory { steps, final_vertex: at, truncated: !graph.is_terminal(at) };
        t.check(graph)?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> Vec<EdgeId> {
        self.steps.iter().map(|s| s.edge).collect()
    }

    /// Checks the chaining invariant against `graph`.
    pub fn check(&self, graph: &SearchGraph) -> Result<()> {
        let fail = |msg: String| Err(Error::Trajectory(msg));
        let Some(first) = self.steps.first() else {
            return fail("trajectory has no steps".into());
        };
        if first.vertex != graph.start() {
            return fail(format!("walk starts at {} instead of {}", first.vertex, graph.start()));
        }
        for (t, step) in self.steps.iter().enumerate() {
            if step.vertex.0 >= graph.num_vertices() || step.edge.0 >= graph.num_edges() {
                return fail(format!("step {t} references an element outside the graph"));
            }
            let edge = graph.edge(step.edge);
            if edge.source != step.vertex {
                return fail(format!("step {t}: {} does not leave {}", step.edge, step.vertex));
            }
            let next = self.steps.get(t + 1).map_or(self.final_vertex, |s| s.vertex);
            if edge.target != next {
                return fail(format!("step {t}: {} leads to {}, not {next}", step.edge, edge.target));
            }
        }
        match (self.truncated, graph.is_terminal(self.final_vertex)) {
            (false, false) => fail(format!("untruncated walk ends at non-terminal {}", self.final_vertex)),
            (true, true) => fail("truncated walk ends at a terminal".into()),
            _ => Ok(()),
        }
    }
}
