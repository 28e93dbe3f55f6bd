//! Reverse-mode gradient tape over a small fixed op set.
//!
//! Every differentiable computation in the crate is expressed through
//! these ops: matrix-vector products, pointwise nonlinearities,
//! elementwise arithmetic, concat/slice, reductions, and the scalar
//! pieces of the PPO objective (exp, clamp, min). There is no
//! broadcasting; shapes must match exactly, which keeps each
//! vector-Jacobian product a few lines of auditable code.
//!
//! A node id refers into the tape that produced it. Nodes only
//! reference earlier nodes, so a single reverse sweep in index order
//! propagates gradients exactly.

use super::categorical::{logsumexp, softmax};
use super::tensor::Tensor;
use super::{ParamId, ParamSet};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug)]
enum Op {
    Leaf,
    /// y = W·x for W [m,n], x [n].
    MatVec { w: NodeId, x: NodeId },
    Tanh(NodeId),
    Sigmoid(NodeId),
    Relu(NodeId),
    Exp(NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    Concat(Vec<NodeId>),
    Slice { x: NodeId, start: usize },
    Sum(NodeId),
    Index { x: NodeId, i: usize },
    LogSumExp(NodeId),
    /// Entropy of softmax(x), a scalar.
    Entropy(NodeId),
    /// Elementwise min; ties route gradient to the first argument.
    Min(NodeId, NodeId),
    Clamp { x: NodeId, lo: f64, hi: f64 },
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Gradients of one scalar loss with respect to every tape node.
pub struct Gradients {
    grads: Vec<Tensor>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> &Tensor {
        &self.grads[id.0]
    }

    /// Gradients for bound parameters, aligned with [`ParamSet`] order.
    pub fn for_params(&self, bound: &BoundParams) -> Vec<Tensor> {
        bound.nodes.iter().map(|&n| self.grads[n.0].clone()).collect()
    }
}

/// Tape node ids for every tensor in a [`ParamSet`].
pub struct BoundParams {
    nodes: Vec<NodeId>,
}

impl BoundParams {
    pub fn node(&self, id: ParamId) -> NodeId {
        self.nodes[id.index()]
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Record an input or parameter value.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// Register every parameter of `params` as a leaf, in set order.
    pub fn bind(&mut self, params: &ParamSet) -> BoundParams {
        let nodes = params
            .tensors()
            .iter()
            .map(|t| self.leaf(t.clone()))
            .collect();
        BoundParams { nodes }
    }

    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> Result<NodeId> {
        let wt = self.value(w);
        let xt = self.value(x);
        if wt.dims().len() != 2 || xt.dims().len() != 1 || wt.cols() != xt.len() {
            return Err(Error::Shape(format!(
                "matvec: W {:?} vs x {:?}",
                wt.dims(),
                xt.dims()
            )));
        }
        let (m, n) = (wt.rows(), wt.cols());
        let mut out = vec![0.0; m];
        let wd = wt.data();
        let xd = xt.data();
        for i in 0..m {
            let row = &wd[i * n..(i + 1) * n];
            out[i] = row.iter().zip(xd).map(|(a, b)| a * b).sum();
        }
        Ok(self.push(Tensor::vector(out), Op::MatVec { w, x }))
    }

    /// y = W·x + b.
    pub fn affine(&mut self, w: NodeId, x: NodeId, b: NodeId) -> Result<NodeId> {
        let wx = self.matvec(w, x)?;
        self.add(wx, b)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = self.map(x, f64::tanh);
        self.push(v, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v = self.map(x, |a| 1.0 / (1.0 + (-a).exp()));
        self.push(v, Op::Sigmoid(x))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = self.map(x, |a| a.max(0.0));
        self.push(v, Op::Relu(x))
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        let v = self.map(x, f64::exp);
        self.push(v, Op::Exp(x))
    }

    fn map(&self, x: NodeId, f: impl Fn(f64) -> f64) -> Tensor {
        let xt = self.value(x);
        let mut out = xt.clone();
        for v in out.data_mut() {
            *v = f(*v);
        }
        out
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip(a, b, "add", |x, y| x + y)?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip(a, b, "sub", |x, y| x - y)?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip(a, b, "mul", |x, y| x * y)?;
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn min(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.zip(a, b, "min", f64::min)?;
        Ok(self.push(v, Op::Min(a, b)))
    }

    fn zip(&self, a: NodeId, b: NodeId, name: &str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let at = self.value(a);
        let bt = self.value(b);
        if at.dims() != bt.dims() {
            return Err(Error::Shape(format!(
                "{}: {:?} vs {:?}",
                name,
                at.dims(),
                bt.dims()
            )));
        }
        let mut out = at.clone();
        for (o, y) in out.data_mut().iter_mut().zip(bt.data()) {
            *o = f(*o, *y);
        }
        Ok(out)
    }

    pub fn scale(&mut self, x: NodeId, k: f64) -> NodeId {
        let v = self.map(x, |a| k * a);
        self.push(v, Op::Scale(x, k))
    }

    pub fn add_scalar(&mut self, x: NodeId, k: f64) -> NodeId {
        let v = self.map(x, |a| a + k);
        self.push(v, Op::AddScalar(x))
    }

    pub fn clamp(&mut self, x: NodeId, lo: f64, hi: f64) -> NodeId {
        let v = self.map(x, |a| a.clamp(lo, hi));
        self.push(v, Op::Clamp { x, lo, hi })
    }

    /// Concatenate flattened inputs into one vector.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Shape("concat of zero tensors".into()));
        }
        let mut data = Vec::new();
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        Ok(self.push(Tensor::vector(data), Op::Concat(parts.to_vec())))
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let xt = self.value(x);
        if start + len > xt.len() {
            return Err(Error::Shape(format!(
                "slice [{start}, {}) of len-{} tensor",
                start + len,
                xt.len()
            )));
        }
        let data = xt.data()[start..start + len].to_vec();
        Ok(self.push(Tensor::vector(data), Op::Slice { x, start }))
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let s: f64 = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    pub fn index(&mut self, x: NodeId, i: usize) -> Result<NodeId> {
        let xt = self.value(x);
        if i >= xt.len() {
            return Err(Error::Shape(format!(
                "index {i} into len-{} tensor",
                xt.len()
            )));
        }
        let v = xt.data()[i];
        Ok(self.push(Tensor::scalar(v), Op::Index { x, i }))
    }

    pub fn logsumexp(&mut self, x: NodeId) -> Result<NodeId> {
        let xt = self.value(x);
        if xt.is_empty() {
            return Err(Error::Shape("logsumexp of empty tensor".into()));
        }
        let v = logsumexp(xt.data());
        Ok(self.push(Tensor::scalar(v), Op::LogSumExp(x)))
    }

    /// Entropy of softmax(x) in nats.
    pub fn entropy(&mut self, x: NodeId) -> Result<NodeId> {
        let xt = self.value(x);
        if xt.is_empty() {
            return Err(Error::Shape("entropy of empty tensor".into()));
        }
        let xs = xt.data();
        let lse = logsumexp(xs);
        let mut h = 0.0;
        for &v in xs {
            let logp = v - lse;
            h -= logp.exp() * logp;
        }
        Ok(self.push(Tensor::scalar(h), Op::Entropy(x)))
    }

    /// log softmax(x)[i] as a scalar node.
    pub fn log_prob(&mut self, logits: NodeId, i: usize) -> Result<NodeId> {
        let xi = self.index(logits, i)?;
        let lse = self.logsumexp(logits)?;
        self.sub(xi, lse)
    }

    /// Σ a_i b_i as a scalar node.
    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let m = self.mul(a, b)?;
        Ok(self.sum(m))
    }

    pub fn square(&mut self, x: NodeId) -> Result<NodeId> {
        self.mul(x, x)
    }

    /// Reverse sweep from a scalar loss. Nodes the loss does not
    /// depend on get zero gradients.
    pub fn backward(&mut self, loss: NodeId) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::Shape(format!(
                "backward on non-scalar node of len {}",
                self.value(loss).len()
            )));
        }
        let mut grads: Vec<Tensor> = self
            .nodes
            .iter()
            .map(|n| Tensor::zeros(n.value.dims()))
            .collect();
        grads[loss.0].data_mut()[0] = 1.0;

        for i in (0..self.nodes.len()).rev() {
            if grads[i].data().iter().all(|&g| g == 0.0) {
                continue;
            }
            let g = grads[i].clone();
            let gd = g.data();
            match &self.nodes[i].op {
                Op::Leaf => {}
                Op::MatVec { w, x } => {
                    let (w, x) = (*w, *x);
                    let n = self.nodes[w.0].value.cols();
                    let m = self.nodes[w.0].value.rows();
                    let wd: Vec<f64> = self.nodes[w.0].value.data().to_vec();
                    let xd: Vec<f64> = self.nodes[x.0].value.data().to_vec();
                    {
                        let gw = grads[w.0].data_mut();
                        for r in 0..m {
                            let gr = gd[r];
                            if gr != 0.0 {
                                for c in 0..n {
                                    gw[r * n + c] += gr * xd[c];
                                }
                            }
                        }
                    }
                    {
                        let gx = grads[x.0].data_mut();
                        for r in 0..m {
                            let gr = gd[r];
                            if gr != 0.0 {
                                let row = &wd[r * n..(r + 1) * n];
                                for (gxc, wc) in gx.iter_mut().zip(row) {
                                    *gxc += gr * wc;
                                }
                            }
                        }
                    }
                }
                Op::Tanh(x) => {
                    let x = *x;
                    let yd: Vec<f64> = self.nodes[i].value.data().to_vec();
                    let gx = grads[x.0].data_mut();
                    for (k, gk) in gd.iter().enumerate() {
                        gx[k] += gk * (1.0 - yd[k] * yd[k]);
                    }
                }
                Op::Sigmoid(x) => {
                    let x = *x;
                    let yd: Vec<f64> = self.nodes[i].value.data().to_vec();
                    let gx = grads[x.0].data_mut();
                    for (k, gk) in gd.iter().enumerate() {
                        gx[k] += gk * yd[k] * (1.0 - yd[k]);
                    }
                }
                Op::Relu(x) => {
                    let x = *x;
                    let xd: Vec<f64> = self.nodes[x.0].value.data().to_vec();
                    let gx = grads[x.0].data_mut();
                    for (k, gk) in gd.iter().enumerate() {
                        if xd[k] > 0.0 {
                            gx[k] += gk;
                        }
                    }
                }
                Op::Exp(x) => {
                    let x = *x;
                    let yd: Vec<f64> = self.nodes[i].value.data().to_vec();
                    let gx = grads[x.0].data_mut();
                    for (k, gk) in gd.iter().enumerate() {
                        gx[k] += gk * yd[k];
                    }
                }
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    accumulate(grads[a.0].data_mut(), gd, 1.0);
                    accumulate(grads[b.0].data_mut(), gd, 1.0);
                }
                Op::Sub(a, b) => {
                    let (a, b) = (*a, *b);
                    accumulate(grads[a.0].data_mut(), gd, 1.0);
                    accumulate(grads[b.0].data_mut(), gd, -1.0);
                }
                Op::Mul(a, b) => {
                    let (a, b) = (*a, *b);
                    let ad: Vec<f64> = self.nodes[a.0].value.data().to_vec();
                    let bd: Vec<f64> = self.nodes[b.0].value.data().to_vec();
                    {
                        let ga = grads[a.0].data_mut();
                        for (k, gk) in gd.iter().enumerate() {
                            ga[k] += gk * bd[k];
                        }
                    }
                    {
                        let gb = grads[b.0].data_mut();
                        for (k, gk) in gd.iter().enumerate() {
                            gb[k] += gk * ad[k];
                        }
                    }
                }
                Op::Scale(x, k) => {
                    let (x, k) = (*x, *k);
                    accumulate(grads[x.0].data_mut(), gd, k);
                }
                Op::AddScalar(x) => {
                    let x = *x;
                    accumulate(grads[x.0].data_mut(), gd, 1.0);
                }
                Op::Concat(parts) => {
                    let parts = parts.clone();
                    let mut off = 0;
                    for p in parts {
                        let len = self.nodes[p.0].value.len();
                        accumulate(grads[p.0].data_mut(), &gd[off..off + len], 1.0);
                        off += len;
                    }
                }
                Op::Slice { x, start } => {
                    let (x, start) = (*x, *start);
                    let gx = grads[x.0].data_mut();
                    accumulate(&mut gx[start..start + gd.len()], gd, 1.0);
                }
                Op::Sum(x) => {
                    let x = *x;
                    let gk = gd[0];
                    for v in grads[x.0].data_mut() {
                        *v += gk;
                    }
                }
                Op::Index { x, i: idx } => {
                    let (x, idx) = (*x, *idx);
                    grads[x.0].data_mut()[idx] += gd[0];
                }
                Op::LogSumExp(x) => {
                    let x = *x;
                    let p = softmax(self.nodes[x.0].value.data());
                    let gk = gd[0];
                    let gx = grads[x.0].data_mut();
                    for (k, pk) in p.iter().enumerate() {
                        gx[k] += gk * pk;
                    }
                }
                Op::Entropy(x) => {
                    // dH/dx_j = −p_j (x_j − Σ_i p_i x_i)
                    let x = *x;
                    let xd: Vec<f64> = self.nodes[x.0].value.data().to_vec();
                    let p = softmax(&xd);
                    let mean: f64 = p.iter().zip(&xd).map(|(pi, xi)| pi * xi).sum();
                    let gk = gd[0];
                    let gx = grads[x.0].data_mut();
                    for k in 0..xd.len() {
                        gx[k] -= gk * p[k] * (xd[k] - mean);
                    }
                }
                Op::Min(a, b) => {
                    let (a, b) = (*a, *b);
                    let ad: Vec<f64> = self.nodes[a.0].value.data().to_vec();
                    let bd: Vec<f64> = self.nodes[b.0].value.data().to_vec();
                    for (k, gk) in gd.iter().enumerate() {
                        if ad[k] <= bd[k] {
                            grads[a.0].data_mut()[k] += gk;
                        } else {
                            grads[b.0].data_mut()[k] += gk;
                        }
                    }
                }
                Op::Clamp { x, lo, hi } => {
                    let (x, lo, hi) = (*x, *lo, *hi);
                    let xd: Vec<f64> = self.nodes[x.0].value.data().to_vec();
                    let gx = grads[x.0].data_mut();
                    for (k, gk) in gd.iter().enumerate() {
                        if xd[k] >= lo && xd[k] <= hi {
                            gx[k] += gk;
                        }
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(dst: &mut [f64], src: &[f64], k: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += k * s;
    }
}
