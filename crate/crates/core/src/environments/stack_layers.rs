use std::sync::Arc;

use super::{Decoded, Environment, RewardedTrial};
use crate::error::{Error, Result};
use crate::search_space::{build_stack_layers, SearchGraph, Trajectory, Variant};

/// `-(n - L)^2`.
pub fn stack_layers_raw(n: usize, layers: usize) -> f64 {
    let d = n as f64 - layers as f64;
    -(d * d)
}

/// `max(0, 1 - (n - L)^2 / L^2)`: exact on `[0, 2L]`, clamped beyond.
pub fn stack_layers_reward(n: usize, layers: usize) -> f64 {
    let l = layers as f64;
    (1.0 + stack_layers_raw(n, layers) / (l * l)).max(0.0)
}

/// Choose the number of layers `n`; best at exactly `L`.
#[derive(Clone, Debug)]
pub struct StackLayersEnv {
    layers: usize,
    variant: Variant,
    max_steps: usize,
    graph: Arc<SearchGraph>,
}

impl StackLayersEnv {
    /// Graph-variant walks are capped at `5 * L` steps unless overridden.
    pub fn new(variant: Variant, layers: usize, max_steps: Option<usize>) -> Result<Self> {
        let graph = Arc::new(build_stack_layers(variant, layers)?);
        let max_steps = match variant {
            Variant::Linear => 2 * layers,
            Variant::Graph => max_steps.unwrap_or(5 * layers),
        };
        if max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        Ok(Self { layers, variant, max_steps, graph })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Layer count encoded by a walk: self-loop traversals in the graph
    /// variant, `add-layer` choices before the first `terminate` in the
    /// linear one.
    pub fn layer_count(&self, trajectory: &Trajectory) -> Result<usize> {
        trajectory.check(&self.graph)?;
        let g = &self.graph;
        Ok(match self.variant {
            Variant::Graph => trajectory.steps.iter().filter(|s| g.is_self_loop(s.edge)).count(),
            Variant::Linear => trajectory.steps.iter().take_while(|s| g.action_index(s.edge) == 0).count(),
        })
    }
}

impl Environment for StackLayersEnv {
    fn name(&self) -> &'static str {
        "stack_layers"
    }

    fn graph(&self) -> &Arc<SearchGraph> {
        &self.graph
    }

    fn max_steps(&self) -> usize {
        self.max_steps
    }

    fn decode(&self, trajectory: &Trajectory) -> Result<Decoded> {
        Ok(Decoded::Layers { n: self.layer_count(trajectory)? })
    }

    fn reward(&self, trajectory: &Trajectory) -> Result<RewardedTrial> {
        let decoded = self.decode(trajectory)?;
        let Decoded::Layers { n } = decoded else { unreachable!() };
        let (raw_reward, reward) = if trajectory.truncated {
            (None, 0.0)
        } else {
            (Some(stack_layers_raw(n, self.layers)), stack_layers_reward(n, self.layers))
        };
        Ok(RewardedTrial { trajectory: trajectory.clone(), decoded, raw_reward, reward })
    }
}
