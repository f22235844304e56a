use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Decision,
    Terminal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub kind: VertexKind,
    #[serde(default)]
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub source: VertexId,
    pub target: VertexId,
    #[serde(default)]
    pub label: String,
}

/// A structural problem found by [`SearchGraph::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    StartNotDecision(VertexId),
    NoTerminal,
    TerminalWithOutEdge { vertex: VertexId, edge: EdgeId },
    DeadEnd(VertexId),
    Unreachable(VertexId),
    NoPathToTerminal(VertexId),
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::StartNotDecision(_) => "start-not-decision",
            Violation::NoTerminal => "no-terminal",
            Violation::TerminalWithOutEdge { .. } => "terminal-with-out-edge",
            Violation::DeadEnd(_) => "dead-end",
            Violation::Unreachable(_) => "unreachable",
            Violation::NoPathToTerminal(_) => "no-path-to-terminal",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::StartNotDecision(v)
            | Violation::DeadEnd(v)
            | Violation::Unreachable(v)
            | Violation::NoPathToTerminal(v) => write!(f, "{} at {v}", self.code()),
            Violation::NoTerminal => f.write_str(self.code()),
            Violation::TerminalWithOutEdge { vertex, edge } => {
                write!(f, "{} at {vertex} ({edge})", self.code())
            }
        }
    }
}

/// Directed multigraph of decisions (vertices) and actions (edges).
///
/// Parallel edges and self-loops are allowed. Out-edges of a vertex are kept
/// in edge-id order, which fixes the meaning of action indices at each vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct SearchGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    start: VertexId,
    out_edges: Vec<Vec<EdgeId>>,
}

/// On-disk layout of a graph description.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct GraphFile {
    start: VertexId,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

impl TryFrom<GraphFile> for SearchGraph {
    type Error = Error;

    fn try_from(file: GraphFile) -> Result<Self> {
        SearchGraph::from_parts(file.vertices, file.edges, file.start)
    }
}

impl From<SearchGraph> for GraphFile {
    fn from(g: SearchGraph) -> Self {
        GraphFile { start: g.start, vertices: g.vertices, edges: g.edges }
    }
}

impl SearchGraph {
    /// Assembles a graph; only dangling vertex references are rejected here,
    /// everything else is reported by [`validate`](Self::validate).
    pub fn from_parts(vertices: Vec<Vertex>, edges: Vec<Edge>, start: VertexId) -> Result<Self> {
        let n = vertices.len();
        if start.0 >= n {
            return Err(Error::Graph(format!("start {start} does not exist ({n} vertices)")));
        }
        let mut out_edges = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.source.0 >= n || e.target.0 >= n {
                return Err(Error::Graph(format!(
                    "edge e{i} references a missing vertex ({} -> {})",
                    e.source, e.target
                )));
            }
            out_edges[e.source.0].push(EdgeId(i));
        }
        Ok(Self { vertices, edges, start, out_edges })
    }

    /// Like [`from_parts`](Self::from_parts) but also requires a clean
    /// [`validate`](Self::validate).
    pub fn new_validated(vertices: Vec<Vertex>, edges: Vec<Edge>, start: VertexId) -> Result<Self> {
        let g = Self::from_parts(vertices, edges, start)?;
        g.ensure_valid()?;
        Ok(g)
    }

    pub fn start(&self) -> VertexId {
        self.start
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.0]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn is_terminal(&self, v: VertexId) -> bool {
        self.vertices[v.0].kind == VertexKind::Terminal
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v.0]
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_edges[v.0].len()
    }

    /// Position of `e` among its source's out-edges (the action index).
    pub fn action_index(&self, e: EdgeId) -> usize {
        let src = self.edges[e.0].source;
        self.out_edges[src.0].binary_search(&e).expect("edge listed at its source")
    }

    pub fn decision_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertex_ids().filter(|&v| !self.is_terminal(v))
    }

    pub fn terminal_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertex_ids().filter(|&v| self.is_terminal(v))
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertices.len()).map(VertexId)
    }

    pub fn is_self_loop(&self, e: EdgeId) -> bool {
        let edge = &self.edges[e.0];
        edge.source == edge.target
    }

    /// Every structural violation, empty when the graph is sound.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.is_terminal(self.start) {
            out.push(Violation::StartNotDecision(self.start));
        }
        if self.terminal_vertices().next().is_none() {
            out.push(Violation::NoTerminal);
        }
        for v in self.vertex_ids() {
            let edges = self.out_edges(v);
            if self.is_terminal(v) {
                out.extend(edges.iter().map(|&edge| Violation::TerminalWithOutEdge { vertex: v, edge }));
            } else if edges.is_empty() {
                out.push(Violation::DeadEnd(v));
            }
        }

        let reachable = self.forward_reachable();
        let reaches_terminal = self.reaches_terminal();
        for v in self.vertex_ids() {
            if !reachable[v.0] {
                out.push(Violation::Unreachable(v));
            } else if !self.is_terminal(v) && !reaches_terminal[v.0] {
                out.push(Violation::NoPathToTerminal(v));
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            return Ok(());
        }
        let msg = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        Err(Error::Graph(msg))
    }

    fn forward_reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([self.start]);
        seen[self.start.0] = true;
        while let Some(v) = queue.pop_front() {
            for &e in self.out_edges(v) {
                let t = self.edges[e.0].target;
                if !seen[t.0] {
                    seen[t.0] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    fn reaches_terminal(&self) -> Vec<bool> {
        let mut incoming = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            incoming[e.target.0].push(e.source);
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut queue: VecDeque<VertexId> = self.terminal_vertices().collect();
        for v in &queue {
            seen[v.0] = true;
        }
        while let Some(v) = queue.pop_front() {
            for &s in &incoming[v.0] {
                if !seen[s.0] {
                    seen[s.0] = true;
                    queue.push_back(s);
                }
            }
        }
        seen
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Incremental construction helper; ids are handed out in insertion order.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn decision(&mut self, label: impl Into<String>) -> VertexId {
        self.vertex(VertexKind::Decision, label)
    }

    pub fn terminal(&mut self, label: impl Into<String>) -> VertexId {
        self.vertex(VertexKind::Terminal, label)
    }

    fn vertex(&mut self, kind: VertexKind, label: impl Into<String>) -> VertexId {
        self.vertices.push(Vertex { kind, label: label.into() });
        VertexId(self.vertices.len() - 1)
    }

    pub fn edge(&mut self, source: VertexId, target: VertexId, label: impl Into<String>) -> EdgeId {
        self.edges.push(Edge { source, target, label: label.into() });
        EdgeId(self.edges.len() - 1)
    }

    pub fn build(self, start: VertexId) -> Result<SearchGraph> {
        SearchGraph::from_parts(self.vertices, self.edges, start)
    }
}
