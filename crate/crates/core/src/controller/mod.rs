//! Dynamic recurrent controller.
//!
//! One timestep embeds the current vertex and the previous action, mixes the
//! two embeddings with a dense tanh layer, advances an LSTM cell, and maps the
//! new hidden state to logits through the head owned by the current vertex.
//! The embeddings, aggregator and cell are shared across timesteps; heads are
//! per decision vertex, so a walk only touches the heads it visits.

mod checkpoint;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, NamedTensor, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};

use crate::autodiff::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::search_space::{EdgeId, SearchGraph, Step, Trajectory, VertexId};

/// Half-width of the uniform initializer for weights and embeddings.
pub const INIT_SCALE: f64 = 0.1;
pub const FORGET_BIAS: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    pub state_embedding_dim: usize,
    pub action_embedding_dim: usize,
    pub aggregator_hidden_dim: usize,
    pub lstm_hidden_dim: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self { state_embedding_dim: 16, action_embedding_dim: 16, aggregator_hidden_dim: 32, lstm_hidden_dim: 64 }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.state_embedding_dim,
            self.action_embedding_dim,
            self.aggregator_hidden_dim,
            self.lstm_hidden_dim,
        ];
        if dims.contains(&0) {
            return Err(Error::Config(format!("controller dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Action fed to a timestep: the edge just taken, or the start token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrevAction {
    Start,
    Edge(EdgeId),
}

/// LSTM hidden and cell values.
#[derive(Clone, Debug, PartialEq)]
pub struct RnnState {
    pub h: Tensor,
    pub c: Tensor,
}

impl RnnState {
    pub fn zeros(dim: usize) -> Self {
        Self { h: Tensor::zeros(&[dim]), c: Tensor::zeros(&[dim]) }
    }
}

/// LSTM state recorded on a tape.
#[derive(Clone, Copy, Debug)]
pub struct RnnVars {
    pub h: Var,
    pub c: Var,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Dense {
    weight: ParamId,
    bias: ParamId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Layout {
    state_embedding: ParamId,
    action_embedding: ParamId,
    aggregator: Dense,
    /// Input, forget, candidate, output.
    gates: [Dense; 4],
    heads: Vec<Option<Dense>>,
}

/// Per-step outcome of sampling a walk.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub trajectory: Trajectory,
    pub log_probs: Vec<f64>,
    pub entropies: Vec<f64>,
}

impl Sample {
    pub fn total_log_prob(&self) -> f64 {
        self.log_probs.iter().sum()
    }

    pub fn total_entropy(&self) -> f64 {
        self.entropies.iter().sum()
    }
}

/// Totals recorded on a tape by [`Controller::score_on_tape`].
#[derive(Clone, Copy, Debug)]
pub struct ScoreVars {
    pub log_prob: Var,
    pub entropy: Var,
}

/// Controller parameters bound to the search graph they were built for.
#[derive(Clone, Debug)]
pub struct Controller {
    graph: Arc<SearchGraph>,
    config: ControllerConfig,
    params: ParamStore,
    layout: Layout,
}

struct Unrolled {
    steps: Vec<Step>,
    log_probs: Vec<Var>,
    entropies: Vec<Var>,
    final_vertex: VertexId,
    truncated: bool,
}

impl Controller {
    /// Builds and randomly initializes parameters for `graph`.
    pub fn init(graph: Arc<SearchGraph>, config: ControllerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if graph.decision_vertices().next().is_none() {
            return Err(Error::Graph("graph has no decision vertices".into()));
        }
        graph.ensure_valid()?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |shape: &[usize]| {
            let n = shape.iter().product();
            let values = (0..n).map(|_| rng.gen_range(-INIT_SCALE..=INIT_SCALE)).collect();
            Tensor::new(shape.to_vec(), values).expect("shape")
        };
        let (ds, da) = (config.state_embedding_dim, config.action_embedding_dim);
        let (ha, hl) = (config.aggregator_hidden_dim, config.lstm_hidden_dim);

        let mut params = ParamStore::new();
        let state_embedding = params.add("state_embedding", uniform(&[graph.num_vertices(), ds]));
        // The extra last row is the start token.
        let action_embedding = params.add("action_embedding", uniform(&[graph.num_edges() + 1, da]));
        let aggregator = Dense {
            weight: params.add("aggregator/weight", uniform(&[ha, ds + da])),
            bias: params.add("aggregator/bias", Tensor::zeros(&[ha])),
        };
        let gates = ["input", "forget", "candidate", "output"].map(|gate| {
            let bias = if gate == "forget" { Tensor::filled(&[hl], FORGET_BIAS) } else { Tensor::zeros(&[hl]) };
            Dense {
                weight: params.add(format!("lstm/{gate}/weight"), uniform(&[hl, ha + hl])),
                bias: params.add(format!("lstm/{gate}/bias"), bias),
            }
        });
        let mut heads = vec![None; graph.num_vertices()];
        for v in graph.decision_vertices() {
            let width = graph.out_degree(v);
            heads[v.0] = Some(Dense {
                weight: params.add(format!("head/{}/weight", v.0), uniform(&[width, hl])),
                bias: params.add(format!("head/{}/bias", v.0), Tensor::zeros(&[width])),
            });
        }

        let layout = Layout { state_embedding, action_embedding, aggregator, gates, heads };
        Ok(Self { graph, config, params, layout })
    }

    pub fn graph(&self) -> &Arc<SearchGraph> {
        &self.graph
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Head (weight, bias) of decision vertex `v`.
    pub fn head(&self, v: VertexId) -> Option<(ParamId, ParamId)> {
        self.layout.heads.get(v.0).copied().flatten().map(|d| (d.weight, d.bias))
    }

    /// Parameters shared by every timestep.
    pub fn shared_params(&self) -> Vec<ParamId> {
        let l = &self.layout;
        let mut ids = vec![l.state_embedding, l.action_embedding, l.aggregator.weight, l.aggregator.bias];
        ids.extend(l.gates.iter().flat_map(|g| [g.weight, g.bias]));
        ids
    }

    pub fn initial_state(&self) -> RnnState {
        RnnState::zeros(self.config.lstm_hidden_dim)
    }

    pub fn initial_vars(&self, tape: &mut Tape<'_>) -> RnnVars {
        let dim = self.config.lstm_hidden_dim;
        RnnVars { h: tape.constant(Tensor::zeros(&[dim])), c: tape.constant(Tensor::zeros(&[dim])) }
    }

    fn check_inputs(&self, vertex: VertexId, prev: PrevAction) -> Result<Dense> {
        if vertex.0 >= self.graph.num_vertices() {
            return Err(Error::Trajectory(format!("{vertex} is not in the graph")));
        }
        let head = self.layout.heads[vertex.0]
            .ok_or_else(|| Error::Trajectory(format!("{vertex} is terminal and has no action distribution")))?;
        if let PrevAction::Edge(e) = prev {
            if e.0 >= self.graph.num_edges() || self.graph.edge(e).target != vertex {
                return Err(Error::Trajectory(format!("{e} is not an in-edge of {vertex}")));
            }
        }
        Ok(head)
    }

    /// Records one timestep on `tape`; returns logits over `vertex`'s out-edges.
    pub fn step_on_tape(
        &self,
        tape: &mut Tape<'_>,
        vertex: VertexId,
        prev: PrevAction,
        state: RnnVars,
    ) -> Result<(Var, RnnVars)> {
        let head = self.check_inputs(vertex, prev)?;
        let l = &self.layout;
        let action_row = match prev {
            PrevAction::Start => self.graph.num_edges(),
            PrevAction::Edge(e) => e.0,
        };

        let state_table = tape.param(l.state_embedding);
        let action_table = tape.param(l.action_embedding);
        let se = tape.row(state_table, vertex.0)?;
        let ae = tape.row(action_table, action_row)?;
        let joined = tape.concat(&[se, ae])?;
        let (aw, ab) = (tape.param(l.aggregator.weight), tape.param(l.aggregator.bias));
        let pre = tape.affine(aw, joined, ab)?;
        let aggregated = tape.tanh(pre)?;

        let cell_in = tape.concat(&[aggregated, state.h])?;
        let gate = |tape: &mut Tape<'_>, d: Dense| -> Result<Var> {
            let (w, b) = (tape.param(d.weight), tape.param(d.bias));
            tape.affine(w, cell_in, b)
        };
        let i_pre = gate(tape, l.gates[0])?;
        let f_pre = gate(tape, l.gates[1])?;
        let g_pre = gate(tape, l.gates[2])?;
        let o_pre = gate(tape, l.gates[3])?;
        let i = tape.sigmoid(i_pre)?;
        let f = tape.sigmoid(f_pre)?;
        let g = tape.tanh(g_pre)?;
        let o = tape.sigmoid(o_pre)?;
        let kept = tape.mul(f, state.c)?;
        let written = tape.mul(i, g)?;
        let c = tape.add(kept, written)?;
        let squashed = tape.tanh(c)?;
        let h = tape.mul(o, squashed)?;

        let (hw, hb) = (tape.param(head.weight), tape.param(head.bias));
        let logits = tape.affine(hw, h, hb)?;
        Ok((logits, RnnVars { h, c }))
    }

    /// One timestep evaluated on a private tape.
    pub fn step(&self, vertex: VertexId, prev: PrevAction, state: &RnnState) -> Result<(Vec<f64>, RnnState)> {
        let mut tape = Tape::new(&self.params);
        let vars = RnnVars { h: tape.constant(state.h.clone()), c: tape.constant(state.c.clone()) };
        let (logits, next) = self.step_on_tape(&mut tape, vertex, prev, vars)?;
        let state = RnnState { h: tape.value(next.h).clone(), c: tape.value(next.c).clone() };
        Ok((tape.value(logits).values().to_vec(), state))
    }

    /// Unrolls the controller from the start vertex, letting `choose` pick an
    /// action index from each step's probabilities.
    fn unroll<F>(&self, tape: &mut Tape<'_>, max_steps: usize, mut choose: F) -> Result<Unrolled>
    where
        F: FnMut(usize, VertexId, &[f64]) -> Result<usize>,
    {
        let mut state = self.initial_vars(tape);
        let mut at = self.graph.start();
        let mut prev = PrevAction::Start;
        let mut out = Unrolled {
            steps: Vec::new(),
            log_probs: Vec::new(),
            entropies: Vec::new(),
            final_vertex: at,
            truncated: false,
        };
        while !self.graph.is_terminal(at) {
            let t = out.steps.len();
            if t == max_steps {
                out.truncated = true;
                break;
            }
            let (logits, next) = self.step_on_tape(tape, at, prev, state)?;
            let probs = tape.softmax(logits)?;
            let log_probs = tape.log_softmax(logits)?;
            let action = choose(t, at, tape.value(probs).values())?;
            let edge = *self.graph.out_edges(at).get(action).ok_or_else(|| {
                Error::Trajectory(format!("action {action} out of range at {at}"))
            })?;

            let nll = tape.nll(log_probs, action)?;
            let log_prob = tape.scale(nll, -1.0)?;
            let plogp = tape.mul(probs, log_probs)?;
            let neg_entropy = tape.sum(plogp)?;
            let entropy = tape.scale(neg_entropy, -1.0)?;

            out.steps.push(Step { vertex: at, edge });
            out.log_probs.push(log_prob);
            out.entropies.push(entropy);
            state = next;
            prev = PrevAction::Edge(edge);
            at = self.graph.edge(edge).target;
        }
        out.final_vertex = at;
        Ok(out)
    }

    /// Samples a walk by inverse-CDF draws from each step's softmax, stopping
    /// at a terminal or flagging truncation after `max_steps` steps.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, max_steps: usize) -> Result<Sample> {
        if max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        let mut tape = Tape::new(&self.params);
        let unrolled = self.unroll(&mut tape, max_steps, |_, _, probs| Ok(inverse_cdf(probs, rng.gen::<f64>())))?;
        let value = |v: &Var| tape.value(*v).item().expect("scalar");
        Ok(Sample {
            log_probs: unrolled.log_probs.iter().map(value).collect(),
            entropies: unrolled.entropies.iter().map(value).collect(),
            trajectory: Trajectory {
                steps: unrolled.steps,
                final_vertex: unrolled.final_vertex,
                truncated: unrolled.truncated,
            },
        })
    }

    /// Replays `trajectory` on `tape`, recording its total log-probability
    /// and total per-step entropy.
    pub fn score_on_tape(&self, tape: &mut Tape<'_>, trajectory: &Trajectory) -> Result<ScoreVars> {
        trajectory.check(&self.graph)?;
        let unrolled = self.unroll(tape, trajectory.len(), |t, _, _| {
            Ok(self.graph.action_index(trajectory.steps[t].edge))
        })?;
        let log_prob = tape.add_all(&unrolled.log_probs)?.expect("non-empty trajectory");
        let entropy = tape.add_all(&unrolled.entropies)?.expect("non-empty trajectory");
        Ok(ScoreVars { log_prob, entropy })
    }

    /// Total log-probability and total entropy of `trajectory`.
    pub fn score(&self, trajectory: &Trajectory) -> Result<(f64, f64)> {
        let mut tape = Tape::new(&self.params);
        let s = self.score_on_tape(&mut tape, trajectory)?;
        Ok((tape.value(s.log_prob).values()[0], tape.value(s.entropy).values()[0]))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::from_controller(self)
    }

    /// Rebuilds a controller for `graph` from a checkpoint, checking that every
    /// tensor is present with the expected shape.
    pub fn from_checkpoint(graph: Arc<SearchGraph>, checkpoint: &Checkpoint) -> Result<Self> {
        checkpoint.check_header()?;
        let mut controller = Self::init(graph, checkpoint.config, 0)?;
        if checkpoint.tensors.len() != controller.params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                controller.params.len(),
                checkpoint.tensors.len()
            )));
        }
        for nt in &checkpoint.tensors {
            let id = controller
                .params
                .find(&nt.name)
                .ok_or_else(|| Error::Checkpoint(format!("unknown tensor `{}`", nt.name)))?;
            let tensor = Tensor::new(nt.shape.clone(), nt.values.clone())
                .map_err(|e| Error::Checkpoint(format!("tensor `{}`: {e}", nt.name)))?;
            if tensor.shape() != controller.params[id].shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{}` has shape {:?}, graph needs {:?}",
                    nt.name,
                    tensor.shape(),
                    controller.params[id].shape()
                )));
            }
            *controller.params.get_mut(id) = tensor;
        }
        Ok(controller)
    }
}

/// Index of the first cumulative probability exceeding `u`.
pub fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    // Rounding left u above the total; fall back to the last reachable action.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}
