//! Directed-graph search spaces.
//!
//! Each decision is a vertex and each available action an outgoing edge. A
//! candidate architecture is the action sequence of a walk from the start
//! vertex to any terminal.

mod builders;
mod enumerate;
mod graph;
mod trajectory;

pub use builders::{
    build_linear_chain, build_select_optimizer, build_stack_layers, LinearChainSpec, ValueRange, Variant,
    ADD_LAYER, HYPERPARAMETERS_PER_BRANCH, STOP, TERMINATE,
};
pub use enumerate::{count_trajectories, enumerate_trajectories, enumerate_with_limit, ENUMERATION_LIMIT};
pub use graph::{Edge, EdgeId, GraphBuilder, SearchGraph, Vertex, VertexId, VertexKind, Violation};
pub use trajectory::{Step, Trajectory};

#[cfg(test)]
mod tests;
