use super::{Gradients, ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// The differentiable operations a tape can record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Primitive {
    /// `[m, k] x [k, n] -> [m, n]` or `[m, k] x [k] -> [m]`.
    MatMul,
    Add,
    /// Elementwise product.
    Mul,
    /// Concatenation of rank-1 vectors.
    Concat,
    Tanh,
    Sigmoid,
    /// Row lookup in a rank-2 table.
    Row(usize),
    Softmax,
    LogSoftmax,
    /// `-x[i]` of a log-probability vector.
    Nll(usize),
    /// `-sum p ln p` of a probability vector.
    Entropy,
    Sum,
    Scale(f64),
}

impl Primitive {
    fn name(self) -> &'static str {
        match self {
            Primitive::MatMul => "matmul",
            Primitive::Add => "add",
            Primitive::Mul => "mul",
            Primitive::Concat => "concat",
            Primitive::Tanh => "tanh",
            Primitive::Sigmoid => "sigmoid",
            Primitive::Row(_) => "row",
            Primitive::Softmax => "softmax",
            Primitive::LogSoftmax => "log_softmax",
            Primitive::Nll(_) => "nll",
            Primitive::Entropy => "entropy",
            Primitive::Sum => "sum",
            Primitive::Scale(_) => "scale",
        }
    }
}

#[derive(Debug)]
enum Node {
    Constant(Tensor),
    Param(ParamId),
    Apply { prim: Primitive, inputs: Vec<Var>, value: Tensor },
}

/// Wengert list over a borrowed parameter store.
///
/// Nodes are appended in evaluation order, so every node's inputs precede
/// it. Parameter leaves read their values from the store instead of copying.
#[derive(Debug)]
pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self { params, nodes: Vec::new(), param_vars: vec![None; params.len()] }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor {
        match &self.nodes[var.0] {
            Node::Constant(t) => t,
            Node::Param(id) => self.params.get(*id),
            Node::Apply { value, .. } => value,
        }
    }

    /// A non-learnable input.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Node::Constant(value))
    }

    /// Registers parameter `id`; repeated calls return the same leaf.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        let v = self.push(Node::Param(id));
        self.param_vars[id.0] = Some(v);
        v
    }

    fn push(&mut self, node: Node) -> Var {
        self.nodes.push(node);
        Var(self.nodes.len() - 1)
    }

    /// Evaluates `prim` on recorded inputs and appends the result.
    pub fn apply(&mut self, prim: Primitive, inputs: &[Var]) -> Result<Var> {
        let value = {
            let vals: Vec<&Tensor> = inputs.iter().map(|&v| self.value(v)).collect();
            forward(prim, &vals)?
        };
        Ok(self.push(Node::Apply { prim, inputs: inputs.to_vec(), value }))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::MatMul, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Add, &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Mul, &[a, b])
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        self.apply(Primitive::Concat, parts)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Tanh, &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Sigmoid, &[a])
    }

    pub fn row(&mut self, table: Var, index: usize) -> Result<Var> {
        self.apply(Primitive::Row(index), &[table])
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Softmax, &[a])
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::LogSoftmax, &[a])
    }

    pub fn nll(&mut self, log_probs: Var, index: usize) -> Result<Var> {
        self.apply(Primitive::Nll(index), &[log_probs])
    }

    pub fn entropy(&mut self, probs: Var) -> Result<Var> {
        self.apply(Primitive::Entropy, &[probs])
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Sum, &[a])
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        self.apply(Primitive::Scale(factor), &[a])
    }

    /// `W x + b` for a matrix `W` and vectors `x`, `b`.
    pub fn affine(&mut self, w: Var, x: Var, b: Var) -> Result<Var> {
        let wx = self.matmul(w, x)?;
        self.add(wx, b)
    }

    /// Adds a list of same-shaped values; `None` for an empty list.
    pub fn add_all(&mut self, terms: &[Var]) -> Result<Option<Var>> {
        let Some((&first, rest)) = terms.split_first() else {
            return Ok(None);
        };
        let mut acc = first;
        for &t in rest {
            acc = self.add(acc, t)?;
        }
        Ok(Some(acc))
    }

    /// Reverse sweep from a scalar `loss`.
    ///
    /// Returns one gradient per parameter of the borrowed store; parameters
    /// with no path to `loss` get exact zeros.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let loss_value = self.value(loss);
        if loss_value.len() != 1 {
            return Err(Error::NonScalarLoss(loss_value.shape().to_vec()));
        }
        let mut grads = Gradients::zeros_like(self.params);
        let mut adjoint: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        adjoint[loss.0] = Some(Tensor::filled(loss_value.shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = adjoint[idx].take() else { continue };
            match &self.nodes[idx] {
                Node::Constant(_) => {}
                Node::Param(id) => accumulate(grads.get_mut(*id).values_mut(), g.values()),
                Node::Apply { prim, inputs, value } => {
                    self.backprop(*prim, inputs, value, &g, &mut adjoint, &mut grads);
                }
            }
        }
        Ok(grads)
    }

    fn backprop(
        &self,
        prim: Primitive,
        inputs: &[Var],
        out: &Tensor,
        g: &Tensor,
        adjoint: &mut [Option<Tensor>],
        grads: &mut Gradients,
    ) {
        let gv = g.values();
        match prim {
            Primitive::MatMul => {
                let a = self.value(inputs[0]);
                let b = self.value(inputs[1]);
                let (m, k) = (a.shape()[0], a.shape()[1]);
                let n = if b.rank() == 2 { b.shape()[1] } else { 1 };
                let (av, bv) = (a.values(), b.values());
                // dA = G B^T
                let mut da = vec![0.0; m * k];
                for i in 0..m {
                    for j in 0..n {
                        let gij = gv[i * n + j];
                        if gij == 0.0 {
                            continue;
                        }
                        let row = &mut da[i * k..(i + 1) * k];
                        for (p, d) in row.iter_mut().enumerate() {
                            *d += gij * bv[p * n + j];
                        }
                    }
                }
                // dB = A^T G
                let mut db = vec![0.0; k * n];
                for i in 0..m {
                    let arow = &av[i * k..(i + 1) * k];
                    for j in 0..n {
                        let gij = gv[i * n + j];
                        if gij == 0.0 {
                            continue;
                        }
                        for (p, &aip) in arow.iter().enumerate() {
                            db[p * n + j] += aip * gij;
                        }
                    }
                }
                self.send(inputs[0], a.shape(), da, adjoint, grads);
                self.send(inputs[1], b.shape(), db, adjoint, grads);
            }
            Primitive::Add => {
                for &inp in inputs {
                    self.send(inp, g.shape(), gv.to_vec(), adjoint, grads);
                }
            }
            Primitive::Mul => {
                let a = self.value(inputs[0]).values();
                let b = self.value(inputs[1]).values();
                let da = gv.iter().zip(b).map(|(g, b)| g * b).collect();
                let db = gv.iter().zip(a).map(|(g, a)| g * a).collect();
                self.send(inputs[0], g.shape(), da, adjoint, grads);
                self.send(inputs[1], g.shape(), db, adjoint, grads);
            }
            Primitive::Concat => {
                let mut offset = 0;
                for &inp in inputs {
                    let n = self.value(inp).len();
                    self.send(inp, &[n], gv[offset..offset + n].to_vec(), adjoint, grads);
                    offset += n;
                }
            }
            Primitive::Tanh => {
                let d = gv.iter().zip(out.values()).map(|(g, y)| g * (1.0 - y * y)).collect();
                self.send(inputs[0], g.shape(), d, adjoint, grads);
            }
            Primitive::Sigmoid => {
                let d = gv.iter().zip(out.values()).map(|(g, y)| g * y * (1.0 - y)).collect();
                self.send(inputs[0], g.shape(), d, adjoint, grads);
            }
            Primitive::Row(index) => {
                let table = inputs[0];
                let shape = self.value(table).shape();
                let cols = shape[1];
                match self.nodes[table.0] {
                    // Sparse accumulation straight into the parameter gradient.
                    Node::Param(id) => {
                        let dst = &mut grads.get_mut(id).values_mut()[index * cols..(index + 1) * cols];
                        accumulate(dst, gv);
                    }
                    _ => {
                        let mut d = vec![0.0; shape[0] * cols];
                        d[index * cols..(index + 1) * cols].copy_from_slice(gv);
                        self.send(table, shape, d, adjoint, grads);
                    }
                }
            }
            Primitive::Softmax => {
                let p = out.values();
                let dot: f64 = gv.iter().zip(p).map(|(g, p)| g * p).sum();
                let d = gv.iter().zip(p).map(|(g, p)| p * (g - dot)).collect();
                self.send(inputs[0], g.shape(), d, adjoint, grads);
            }
            Primitive::LogSoftmax => {
                let total: f64 = gv.iter().sum();
                let d = gv.iter().zip(out.values()).map(|(g, ls)| g - ls.exp() * total).collect();
                self.send(inputs[0], g.shape(), d, adjoint, grads);
            }
            Primitive::Nll(index) => {
                let x = self.value(inputs[0]);
                let mut d = vec![0.0; x.len()];
                d[index] = -gv[0];
                self.send(inputs[0], x.shape(), d, adjoint, grads);
            }
            Primitive::Entropy => {
                let p = self.value(inputs[0]);
                let d = p
                    .values()
                    .iter()
                    .map(|&p| if p > 0.0 { -gv[0] * (p.ln() + 1.0) } else { 0.0 })
                    .collect();
                self.send(inputs[0], p.shape(), d, adjoint, grads);
            }
            Primitive::Sum => {
                let x = self.value(inputs[0]);
                self.send(inputs[0], x.shape(), vec![gv[0]; x.len()], adjoint, grads);
            }
            Primitive::Scale(c) => {
                let d = gv.iter().map(|g| g * c).collect();
                self.send(inputs[0], g.shape(), d, adjoint, grads);
            }
        }
    }

    fn send(
        &self,
        to: Var,
        shape: &[usize],
        values: Vec<f64>,
        adjoint: &mut [Option<Tensor>],
        grads: &mut Gradients,
    ) {
        match self.nodes[to.0] {
            Node::Constant(_) => {}
            Node::Param(id) => accumulate(grads.get_mut(id).values_mut(), &values),
            Node::Apply { .. } => match &mut adjoint[to.0] {
                Some(existing) => accumulate(existing.values_mut(), &values),
                slot @ None => {
                    *slot = Some(Tensor::new(shape.to_vec(), values).expect("adjoint shape"));
                }
            },
        }
    }
}

fn accumulate(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn unary<'a>(prim: Primitive, inputs: &[&'a Tensor]) -> Result<&'a Tensor> {
    match inputs {
        [x] => Ok(x),
        _ => Err(Error::Shape {
            op: prim.name(),
            shapes: format!("expected 1 input, got {}", inputs.len()),
        }),
    }
}

fn binary<'a>(prim: Primitive, inputs: &[&'a Tensor]) -> Result<(&'a Tensor, &'a Tensor)> {
    match inputs {
        [a, b] => Ok((a, b)),
        _ => Err(Error::Shape {
            op: prim.name(),
            shapes: format!("expected 2 inputs, got {}", inputs.len()),
        }),
    }
}

fn nonempty_vector<'a>(prim: Primitive, inputs: &[&'a Tensor]) -> Result<&'a Tensor> {
    let x = unary(prim, inputs)?;
    if x.rank() != 1 {
        return Err(Error::shape(prim.name(), &[x.shape()]));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput { op: prim.name() });
    }
    Ok(x)
}

fn map(x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::new(x.shape().to_vec(), x.values().iter().map(|&v| f(v)).collect())
        .expect("same shape")
}

fn log_sum_exp(x: &[f64]) -> (f64, f64) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = x.iter().map(|v| (v - max).exp()).sum();
    (max, sum)
}

/// Forward evaluation of one primitive, with full shape checking.
pub fn forward(prim: Primitive, inputs: &[&Tensor]) -> Result<Tensor> {
    let name = prim.name();
    match prim {
        Primitive::MatMul => {
            let (a, b) = binary(prim, inputs)?;
            if a.rank() != 2 || !(b.rank() == 1 || b.rank() == 2) || a.shape()[1] != b.shape()[0] {
                return Err(Error::shape(name, &[a.shape(), b.shape()]));
            }
            let (m, k) = (a.shape()[0], a.shape()[1]);
            let n = if b.rank() == 2 { b.shape()[1] } else { 1 };
            let (av, bv) = (a.values(), b.values());
            let mut out = vec![0.0; m * n];
            for i in 0..m {
                let arow = &av[i * k..(i + 1) * k];
                for (p, &aip) in arow.iter().enumerate() {
                    let brow = &bv[p * n..(p + 1) * n];
                    for (o, &bpj) in out[i * n..(i + 1) * n].iter_mut().zip(brow) {
                        *o += aip * bpj;
                    }
                }
            }
            let shape = if b.rank() == 2 { vec![m, n] } else { vec![m] };
            Tensor::new(shape, out)
        }
        Primitive::Add | Primitive::Mul => {
            let (a, b) = binary(prim, inputs)?;
            if a.shape() != b.shape() {
                return Err(Error::shape(name, &[a.shape(), b.shape()]));
            }
            let values = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| if prim == Primitive::Add { x + y } else { x * y })
                .collect();
            Tensor::new(a.shape().to_vec(), values)
        }
        Primitive::Concat => {
            if inputs.is_empty() {
                return Err(Error::EmptyInput { op: name });
            }
            if let Some(bad) = inputs.iter().find(|t| t.rank() != 1) {
                return Err(Error::shape(name, &[bad.shape()]));
            }
            let values = inputs.iter().flat_map(|t| t.values().iter().copied()).collect();
            Ok(Tensor::vector(values))
        }
        Primitive::Tanh => Ok(map(unary(prim, inputs)?, f64::tanh)),
        Primitive::Sigmoid => Ok(map(unary(prim, inputs)?, |v| {
            if v >= 0.0 {
                1.0 / (1.0 + (-v).exp())
            } else {
                let e = v.exp();
                e / (1.0 + e)
            }
        })),
        Primitive::Row(index) => {
            let table = unary(prim, inputs)?;
            if table.rank() != 2 {
                return Err(Error::shape(name, &[table.shape()]));
            }
            let row = table
                .row(index)
                .ok_or(Error::Index { op: name, index, len: table.shape()[0] })?;
            Ok(Tensor::vector(row.to_vec()))
        }
        Primitive::Softmax => {
            let x = nonempty_vector(prim, inputs)?;
            let (max, sum) = log_sum_exp(x.values());
            Ok(map(x, |v| (v - max).exp() / sum))
        }
        Primitive::LogSoftmax => {
            let x = nonempty_vector(prim, inputs)?;
            let (max, sum) = log_sum_exp(x.values());
            let log_z = max + sum.ln();
            Ok(map(x, |v| v - log_z))
        }
        Primitive::Nll(index) => {
            let x = nonempty_vector(prim, inputs)?;
            let v = x.values().get(index).ok_or(Error::Index { op: name, index, len: x.len() })?;
            Ok(Tensor::scalar(-v))
        }
        Primitive::Entropy => {
            let p = nonempty_vector(prim, inputs)?;
            let h = p.values().iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
            Ok(Tensor::scalar(h))
        }
        Primitive::Sum => Ok(Tensor::scalar(unary(prim, inputs)?.values().iter().sum())),
        Primitive::Scale(c) => Ok(map(unary(prim, inputs)?, |v| v * c)),
    }
}
