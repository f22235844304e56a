use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GraphBuilder, SearchGraph, VertexId};
use crate::error::{Error, Result};

/// Number of hyperparameters chosen per optimizer branch.
pub const HYPERPARAMETERS_PER_BRANCH: usize = 4;

pub const ADD_LAYER: &str = "add-layer";
pub const STOP: &str = "stop";
pub const TERMINATE: &str = "terminate";

/// Encoding of a toy search space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Fixed-length chain of decisions.
    Linear,
    /// Branching / cyclic graph.
    Graph,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Linear => "linear",
            Variant::Graph => "graph",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Variant::Linear),
            "graph" => Ok(Variant::Graph),
            other => Err(Error::Config(format!("unknown variant `{other}` (expected linear|graph)"))),
        }
    }
}

/// Inclusive integer interval of hyperparameter values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueRange {
    pub lo: i64,
    pub hi: i64,
}

impl ValueRange {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::Config(format!("empty value range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, v: i64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }

    pub fn values(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    /// Value selected by action index `i` at a hyperparameter vertex.
    pub fn value_at(&self, i: usize) -> i64 {
        self.lo + i as i64
    }
}

/// Action counts of a fixed-length decision chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearChainSpec {
    pub action_counts: Vec<usize>,
}

impl LinearChainSpec {
    pub fn new(action_counts: Vec<usize>) -> Self {
        Self { action_counts }
    }
}

/// Chains `labels.len()` decisions; position `i` gets one parallel edge per
/// entry of `labels[i]`.
fn chain(b: &mut GraphBuilder, names: impl Fn(usize) -> String, labels: &[Vec<String>]) -> VertexId {
    let positions: Vec<VertexId> = (0..labels.len()).map(|i| b.decision(names(i))).collect();
    let end = b.terminal("end");
    for (i, actions) in labels.iter().enumerate() {
        let next = positions.get(i + 1).copied().unwrap_or(end);
        for label in actions {
            b.edge(positions[i], next, label.clone());
        }
    }
    positions[0]
}

/// Path graph with one decision per spec entry and a final terminal.
pub fn build_linear_chain(spec: &LinearChainSpec) -> Result<SearchGraph> {
    if spec.action_counts.is_empty() || spec.action_counts.contains(&0) {
        return Err(Error::Config(format!(
            "linear chain needs at least one position and positive action counts, got {:?}",
            spec.action_counts
        )));
    }
    let labels: Vec<Vec<String>> =
        spec.action_counts.iter().map(|&n| (0..n).map(|j| format!("a{j}")).collect()).collect();
    let mut b = GraphBuilder::new();
    let start = chain(&mut b, |i| format!("d{i}"), &labels);
    b.build(start)
}

/// Stack-layers space for target depth `layers`.
///
/// The graph variant is one decision with an `add-layer` self-loop and a
/// `stop` edge to the terminal. The linear variant is a chain of `2 * layers`
/// binary decisions offering `add-layer` or `terminate`; the walk always has
/// the full length and the layer count is read up to the first `terminate`.
pub fn build_stack_layers(variant: Variant, layers: usize) -> Result<SearchGraph> {
    if layers < 1 {
        return Err(Error::Config("stack-layers needs L >= 1".into()));
    }
    let mut b = GraphBuilder::new();
    let start = match variant {
        Variant::Graph => {
            let v = b.decision("layer");
            let end = b.terminal("end");
            b.edge(v, v, ADD_LAYER);
            b.edge(v, end, STOP);
            v
        }
        Variant::Linear => {
            let binary = vec![ADD_LAYER.to_string(), TERMINATE.to_string()];
            chain(&mut b, |i| format!("position-{}", i + 1), &vec![binary; 2 * layers])
        }
    };
    b.build(start)
}

/// Select-optimizer space: pick one of `branches` optimizers, then four
/// hyperparameters from `range`.
///
/// The graph variant gives each optimizer a private chain of hyperparameter
/// vertices. The linear variant flattens all branches branch-major after the
/// optimizer choice, so every walk sets every optimizer's hyperparameters.
pub fn build_select_optimizer(variant: Variant, branches: usize, range: ValueRange) -> Result<SearchGraph> {
    if branches < 1 {
        return Err(Error::Config("select-optimizer needs B >= 1".into()));
    }
    if range.is_empty() {
        return Err(Error::Config(format!("empty value range [{}, {}]", range.lo, range.hi)));
    }
    let values: Vec<String> = range.values().map(|v| v.to_string()).collect();
    let mut b = GraphBuilder::new();
    let root = b.decision("optimizer");
    match variant {
        Variant::Graph => {
            let end = b.terminal("end");
            for k in 1..=branches {
                let hp: Vec<VertexId> =
                    (1..=HYPERPARAMETERS_PER_BRANCH).map(|i| b.decision(format!("b{k}.p{i}"))).collect();
                b.edge(root, hp[0], format!("optimizer-{k}"));
                for (i, &v) in hp.iter().enumerate() {
                    let next = hp.get(i + 1).copied().unwrap_or(end);
                    for label in &values {
                        b.edge(v, next, label.clone());
                    }
                }
            }
        }
        Variant::Linear => {
            let labels = vec![values; branches * HYPERPARAMETERS_PER_BRANCH];
            let names = |i: usize| {
                format!("b{}.p{}", i / HYPERPARAMETERS_PER_BRANCH + 1, i % HYPERPARAMETERS_PER_BRANCH + 1)
            };
            let first = chain(&mut b, names, &labels);
            for k in 1..=branches {
                b.edge(root, first, format!("optimizer-{k}"));
            }
        }
    }
    b.build(root)
}
