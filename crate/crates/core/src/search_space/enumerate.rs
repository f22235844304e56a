use super::{EdgeId, SearchGraph, Step, Trajectory, VertexId};
use crate::error::{Error, Result};

/// Upper bound on the number of trajectories [`enumerate_trajectories`] returns.
pub const ENUMERATION_LIMIT: usize = 10_000_000;

/// All terminal-reaching walks of at most `max_steps` steps, depth-first in
/// out-edge order. Walks still running at the cap are dropped.
pub fn enumerate_trajectories(graph: &SearchGraph, max_steps: usize) -> Result<Vec<Trajectory>> {
    enumerate_with_limit(graph, max_steps, ENUMERATION_LIMIT)
}

pub fn enumerate_with_limit(graph: &SearchGraph, max_steps: usize, limit: usize) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    if max_steps == 0 {
        return Ok(out);
    }
    let mut path = Vec::with_capacity(max_steps);
    walk(graph, graph.start(), max_steps, limit, &mut path, &mut out)?;
    Ok(out)
}

fn walk(
    graph: &SearchGraph,
    at: VertexId,
    max_steps: usize,
    limit: usize,
    path: &mut Vec<Step>,
    out: &mut Vec<Trajectory>,
) -> Result<()> {
    if graph.is_terminal(at) {
        if out.len() >= limit {
            return Err(Error::EnumerationLimit { limit });
        }
        out.push(Trajectory { steps: path.clone(), final_vertex: at, truncated: false });
        return Ok(());
    }
    if path.len() == max_steps {
        return Ok(());
    }
    for &edge in graph.out_edges(at) {
        path.push(Step { vertex: at, edge });
        walk(graph, graph.edge(edge).target, max_steps, limit, path, out)?;
        path.pop();
    }
    Ok(())
}

/// Number of terminal-reaching walks of at most `max_steps` steps, counted
/// without materializing them.
pub fn count_trajectories(graph: &SearchGraph, max_steps: usize) -> u128 {
    if max_steps == 0 {
        return 0;
    }
    // After k rounds, ways[v] counts terminal-reaching walks from v of at most k steps.
    let n = graph.num_vertices();
    let mut ways: Vec<u128> = (0..n).map(|v| graph.is_terminal(VertexId(v)) as u128).collect();
    for _ in 0..max_steps {
        let next: Vec<u128> = (0..n)
            .map(|v| {
                let v = VertexId(v);
                if graph.is_terminal(v) {
                    1
                } else {
                    graph
                        .out_edges(v)
                        .iter()
                        .map(|&e: &EdgeId| ways[graph.edge(e).target.0])
                        .fold(0u128, u128::saturating_add)
                }
            })
            .collect();
        ways = next;
    }
    ways[graph.start().0]
}
