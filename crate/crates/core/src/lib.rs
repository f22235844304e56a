//! Neural architecture search over directed-graph search spaces.
//!
//! Decisions are vertices and actions are edges; a recurrent controller is
//! unrolled dynamically along whichever path it samples, and is trained with
//! REINFORCE or priority queue training against toy reward environments.

pub mod autodiff;
pub mod controller;
pub mod environments;
pub mod error;
pub mod harness;
pub mod search_space;
pub mod training;

pub use autodiff::{Gradients, ParamId, ParamStore, Tape, Tensor, Var};
pub use controller::{Controller, ControllerConfig, PrevAction, RnnState};
pub use environments::{Environment, RewardedTrial, SelectOptimizerEnv, StackLayersEnv};
pub use error::{Error, Result};
pub use search_space::{EdgeId, SearchGraph, Trajectory, ValueRange, Variant, VertexId};
pub use harness::{EnvSpec, ExperimentConfig};
pub use training::{Algorithm, PqtConfig, ReinforceConfig, RunHistory, SearchConfig};
