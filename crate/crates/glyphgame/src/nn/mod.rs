//! Minimal differentiable compute core: tensors, a reverse-mode tape,
//! categorical distributions, an LSTM step, and an Adam optimizer.
//!
//! Training runs entirely in f64; parameter init is uniform in
//! ±1/√fan_in from a seeded stream.

pub mod categorical;
pub mod tape;
pub mod tensor;

pub use categorical::{
    argmax, categorical_entropy, categorical_log_prob, categorical_sample, logsumexp, softmax,
};
pub use tape::{BoundParams, Gradients, NodeId, Tape};
pub use tensor::Tensor;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Index of a tensor within a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(usize);

impl ParamId {
    pub(crate) fn index(self) -> usize {
        self.0
    }
}

/// An ordered, named collection of parameter tensors.
///
/// Order is the serialization and optimizer order; names appear in
/// checkpoints.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn add(&mut self, name: &str, tensor: Tensor) -> ParamId {
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    /// Total scalar count across all tensors.
    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    /// Replace a tensor wholesale; shape must match.
    pub fn set(&mut self, id: ParamId, tensor: Tensor) -> Result<()> {
        if tensor.dims() != self.tensors[id.0].dims() {
            return Err(Error::Shape(format!(
                "param {} expects {:?}, got {:?}",
                self.names[id.0],
                self.tensors[id.0].dims(),
                tensor.dims()
            )));
        }
        self.tensors[id.0] = tensor;
        Ok(())
    }
}

/// Uniform(−1/√fan_in, +1/√fan_in) initialization.
pub fn init_uniform(dims: &[usize], fan_in: usize, rng: &mut RngStream) -> Tensor {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let mut t = Tensor::zeros(dims);
    for v in t.data_mut() {
        *v = rng.uniform_in(-bound, bound);
    }
    t
}

/// Recurrent hidden/cell pair, recorded on a tape.
#[derive(Debug, Clone, Copy)]
pub struct LstmState {
    pub h: NodeId,
    pub c: NodeId,
}

/// LSTM cell parameters: stacked gate weights for input and hidden,
/// plus a stacked bias. Gate layout along rows is [i, f, g, o].
#[derive(Debug, Clone, Copy)]
pub struct LstmParams {
    pub wx: ParamId,
    pub wh: ParamId,
    pub b: ParamId,
    pub hidden: usize,
}

impl LstmParams {
    pub fn init(
        params: &mut ParamSet,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut RngStream,
    ) -> Self {
        let wx = params.add(
            &format!("{prefix}.wx"),
            init_uniform(&[4 * hidden, input], input, rng),
        );
        let wh = params.add(
            &format!("{prefix}.wh"),
            init_uniform(&[4 * hidden, hidden], hidden, rng),
        );
        let b = params.add(
            &format!("{prefix}.b"),
            init_uniform(&[4 * hidden], hidden, rng),
        );
        LstmParams { wx, wh, b, hidden }
    }

    pub fn zero_state(&self, tape: &mut Tape) -> LstmState {
        LstmState {
            h: tape.leaf(Tensor::zeros(&[self.hidden])),
            c: tape.leaf(Tensor::zeros(&[self.hidden])),
        }
    }
}

/// One LSTM step:
/// i,f,o = σ(gates), g = tanh(gates), c' = f⊙c + i⊙g, h' = o⊙tanh(c').
///
/// Composed from primitive tape ops, so it is differentiable through
/// the input, both state tensors, and all three parameter tensors.
pub fn lstm_step(
    tape: &mut Tape,
    x: NodeId,
    state: LstmState,
    wx: NodeId,
    wh: NodeId,
    b: NodeId,
    hidden: usize,
) -> Result<LstmState> {
    let from_x = tape.matvec(wx, x)?;
    let from_h = tape.matvec(wh, state.h)?;
    let pre = tape.add(from_x, from_h)?;
    let pre = tape.add(pre, b)?;
    let i_pre = tape.slice(pre, 0, hidden)?;
    let f_pre = tape.slice(pre, hidden, hidden)?;
    let g_pre = tape.slice(pre, 2 * hidden, hidden)?;
    let o_pre = tape.slice(pre, 3 * hidden, hidden)?;
    let i = tape.sigmoid(i_pre);
    let f = tape.sigmoid(f_pre);
    let g = tape.tanh(g_pre);
    let o = tape.sigmoid(o_pre);
    let fc = tape.mul(f, state.c)?;
    let ig = tape.mul(i, g)?;
    let c = tape.add(fc, ig)?;
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc)?;
    Ok(LstmState { h, c })
}

/// Adam with bias correction; one instance per policy.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new(lr: f64, params: &ParamSet) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: params.tensors().iter().map(|t| Tensor::zeros(t.dims())).collect(),
            v: params.tensors().iter().map(|t| Tensor::zeros(t.dims())).collect(),
        }
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor]) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::Shape(format!(
                "adam: {} grads for {} params",
                grads.len(),
                params.len()
            )));
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for (idx, tensor) in params.tensors_mut().iter_mut().enumerate() {
            let g = grads[idx].data();
            let m = self.m[idx].data_mut();
            let v = self.v[idx].data_mut();
            let p = tensor.data_mut();
            for k in 0..p.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                let mhat = m[k] / b1t;
                let vhat = v[k] / b2t;
                p[k] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Scale gradients so their global L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_grad_norm(grads: &mut [Tensor], max_norm: f64) -> f64 {
    let total: f64 = grads.iter().map(|g| g.sq_norm()).sum::<f64>().sqrt();
    if total > max_norm && total > 0.0 {
        let k = max_norm / total;
        for g in grads.iter_mut() {
            for v in g.data_mut() {
                *v *= k;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leafv(tape: &mut Tape, data: Vec<f64>) -> NodeId {
        tape.leaf(Tensor::vector(data))
    }

    #[test]
    fn affine_identity_and_zero() {
        let mut tape = Tape::new();
        let w = tape.leaf(Tensor::from_shape(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let x = leafv(&mut tape, vec![3.0, -4.0]);
        let b = leafv(&mut tape, vec![0.0, 0.0]);
        let y = tape.affine(w, x, b).unwrap();
        assert_eq!(tape.value(y).data(), &[3.0, -4.0]);

        let w0 = tape.leaf(Tensor::zeros(&[2, 2]));
        let b0 = leafv(&mut tape, vec![0.5, -0.5]);
        let y0 = tape.affine(w0, x, b0).unwrap();
        assert_eq!(tape.value(y0).data(), &[0.5, -0.5]);
    }

    #[test]
    fn affine_matches_triple_loop() {
        let mut rng = RngStream::new(5, 0);
        let wdat: Vec<f64> = (0..12).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let xdat: Vec<f64> = (0..4).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let bdat: Vec<f64> = (0..3).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let mut expect = vec![0.0; 3];
        for i in 0..3 {
            expect[i] = bdat[i];
            for j in 0..4 {
                expect[i] += wdat[i * 4 + j] * xdat[j];
            }
        }
        let mut tape = Tape::new();
        let w = tape.leaf(Tensor::from_shape(&[3, 4], wdat).unwrap());
        let x = leafv(&mut tape, xdat);
        let b = leafv(&mut tape, bdat);
        let y = tape.affine(w, x, b).unwrap();
        for (got, want) in tape.value(y).data().iter().zip(&expect) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_shape_mismatch_errors() {
        let mut tape = Tape::new();
        let w = tape.leaf(Tensor::zeros(&[3, 4]));
        let x = tape.leaf(Tensor::zeros(&[5]));
        let b = tape.leaf(Tensor::zeros(&[3]));
        assert!(tape.affine(w, x, b).is_err());
    }

    #[test]
    fn lstm_zero_params_zero_state_is_fixed_point() {
        let hidden = 3;
        let mut params = ParamSet::new();
        let wx = params.add("wx", Tensor::zeros(&[4 * hidden, 2]));
        let wh = params.add("wh", Tensor::zeros(&[4 * hidden, hidden]));
        let b = params.add("b", Tensor::zeros(&[4 * hidden]));
        let mut tape = Tape::new();
        let bound = tape.bind(&params);
        let x = tape.leaf(Tensor::zeros(&[2]));
        let state = LstmState {
            h: tape.leaf(Tensor::zeros(&[hidden])),
            c: tape.leaf(Tensor::zeros(&[hidden])),
        };
        let next = lstm_step(
            &mut tape,
            x,
            state,
            bound.node(wx),
            bound.node(wh),
            bound.node(b),
            hidden,
        )
        .unwrap();
        assert!(tape.value(next.h).data().iter().all(|&v| v == 0.0));
        assert!(tape.value(next.c).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lstm_zero_params_nonzero_cell() {
        // gates are σ(0) = 0.5, g = tanh(0) = 0:
        // c' = 0.5 c0, h' = 0.5 tanh(0.5 c0)
        let hidden = 2;
        let c0 = [0.8, -1.2];
        let mut tape = Tape::new();
        let wx = tape.leaf(Tensor::zeros(&[4 * hidden, 1]));
        let wh = tape.leaf(Tensor::zeros(&[4 * hidden, hidden]));
        let b = tape.leaf(Tensor::zeros(&[4 * hidden]));
        let x = tape.leaf(Tensor::zeros(&[1]));
        let state = LstmState {
            h: tape.leaf(Tensor::zeros(&[hidden])),
            c: tape.leaf(Tensor::vector(c0.to_vec())),
        };
        let next = lstm_step(&mut tape, x, state, wx, wh, b, hidden).unwrap();
        for k in 0..hidden {
            let c_expect = 0.5 * c0[k];
            let h_expect = 0.5 * (0.5 * c0[k]).tanh();
            assert!((tape.value(next.c).data()[k] - c_expect).abs() < 1e-15);
            assert!((tape.value(next.h).data()[k] - h_expect).abs() < 1e-15);
        }
    }

    #[test]
    fn lstm_shape_mismatch_errors() {
        let hidden = 3;
        let mut tape = Tape::new();
        let wx = tape.leaf(Tensor::zeros(&[4 * hidden, 2]));
        let wh = tape.leaf(Tensor::zeros(&[4 * hidden, hidden]));
        let b = tape.leaf(Tensor::zeros(&[4 * hidden]));
        let x = tape.leaf(Tensor::zeros(&[5])); // expects 2
        let state = LstmState {
            h: tape.leaf(Tensor::zeros(&[hidden])),
            c: tape.leaf(Tensor::zeros(&[hidden])),
        };
        assert!(lstm_step(&mut tape, x, state, wx, wh, b, hidden).is_err());
    }

    #[test]
    fn backward_of_param_sum_is_ones() {
        let mut params = ParamSet::new();
        let a = params.add("a", Tensor::vector(vec![1.0, 2.0, 3.0]));
        let b = params.add("b", Tensor::vector(vec![4.0, 5.0]));
        let mut tape = Tape::new();
        let bound = tape.bind(&params);
        let sa = tape.sum(bound.node(a));
        let sb = tape.sum(bound.node(b));
        let loss = tape.add(sa, sb).unwrap();
        let grads = tape.backward(loss).unwrap();
        let got = grads.for_params(&bound);
        assert_eq!(got[0].data(), &[1.0, 1.0, 1.0]);
        assert_eq!(got[1].data(), &[1.0, 1.0]);
    }

    #[test]
    fn backward_norm_squared_matches_closed_form() {
        // loss = ‖Wx‖²; dL/dW = 2(Wx)xᵀ, dL/dx = 2Wᵀ(Wx)
        let mut rng = RngStream::new(42, 0);
        let wdat: Vec<f64> = (0..12).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let xdat: Vec<f64> = (0..4).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let mut tape = Tape::new();
        let w = tape.leaf(Tensor::from_shape(&[3, 4], wdat.clone()).unwrap());
        let x = tape.leaf(Tensor::vector(xdat.clone()));
        let y = tape.matvec(w, x).unwrap();
        let loss = tape.dot(y, y).unwrap();
        let yv: Vec<f64> = tape.value(y).data().to_vec();
        let grads = tape.backward(loss).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                let want = 2.0 * yv[i] * xdat[j];
                let got = grads.get(w).data()[i * 4 + j];
                assert!((got - want).abs() < 1e-10, "dW[{i},{j}] {got} vs {want}");
            }
        }
        for j in 0..4 {
            let want: f64 = (0..3).map(|i| 2.0 * wdat[i * 4 + j] * yv[i]).sum();
            let got = grads.get(x).data()[j];
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::vector(vec![1.0, 2.0]));
        assert!(tape.backward(x).is_err());
    }

    #[test]
    fn unvisited_params_get_zero_gradient() {
        let mut params = ParamSet::new();
        let a = params.add("a", Tensor::vector(vec![1.0, 2.0]));
        let b = params.add("b", Tensor::vector(vec![3.0]));
        let mut tape = Tape::new();
        let bound = tape.bind(&params);
        let loss = tape.sum(bound.node(a));
        let grads = tape.backward(loss).unwrap();
        let _ = a;
        assert_eq!(grads.get(bound.node(b)).data(), &[0.0]);
    }

    #[test]
    fn finite_difference_per_op() {
        // Weighted sums of each op's output, differentiated w.r.t. the input
        // vector, against central differences.
        type Build = fn(&mut Tape, NodeId) -> NodeId;
        let cases: Vec<(&str, Build)> = vec![
            ("tanh", |t, x| t.tanh(x)),
            ("sigmoid", |t, x| t.sigmoid(x)),
            ("relu", |t, x| t.relu(x)),
            ("exp", |t, x| t.exp(x)),
            ("logsumexp", |t, x| {
                let s = t.logsumexp(x).unwrap();
                t.scale(s, 1.0)
            }),
            ("entropy", |t, x| {
                let s = t.entropy(x).unwrap();
                t.scale(s, 1.0)
            }),
            ("logprob2", |t, x| {
                let s = t.log_prob(x, 2).unwrap();
                t.scale(s, 1.0)
            }),
        ];
        let x0 = vec![0.3, -0.7, 1.1, 0.05];
        let weights = vec![0.7, -1.3, 0.4, 0.9];
        for (name, build) in cases {
            let f = |xs: &[f64]| -> f64 {
                let mut tape = Tape::new();
                let x = tape.leaf(Tensor::vector(xs.to_vec()));
                let y = build(&mut tape, x);
                if tape.value(y).len() == 1 {
                    tape.value(y).item()
                } else {
                    let w = tape.leaf(Tensor::vector(weights.clone()));
                    let d = tape.dot(y, w).unwrap();
                    tape.value(d).item()
                }
            };
            let mut tape = Tape::new();
            let x = tape.leaf(Tensor::vector(x0.clone()));
            let y = build(&mut tape, x);
            let loss = if tape.value(y).len() == 1 {
                y
            } else {
                let w = tape.leaf(Tensor::vector(weights.clone()));
                tape.dot(y, w).unwrap()
            };
            let grads = tape.backward(loss).unwrap();
            let analytic = grads.get(x).data().to_vec();
            let h = 1e-5;
            for k in 0..x0.len() {
                let mut hi = x0.clone();
                hi[k] += h;
                let mut lo = x0.clone();
                lo[k] -= h;
                let fd = (f(&hi) - f(&lo)) / (2.0 * h);
                let denom = analytic[k].abs().max(fd.abs()).max(1e-6);
                assert!(
                    (analytic[k] - fd).abs() / denom <= 1e-4,
                    "{name}[{k}]: analytic {} vs fd {}",
                    analytic[k],
                    fd
                );
            }
        }
    }

    #[test]
    fn clipped_surrogate_arithmetic() {
        // ratio 1.5 clipped to 1.2 at eps 0.2; with positive advantage
        // the min picks the clipped branch
        let advantage = 0.7;
        let mut tape = Tape::new();
        let ratio = tape.leaf(Tensor::scalar(1.5));
        let surr1 = tape.scale(ratio, advantage);
        let clipped = tape.clamp(ratio, 0.8, 1.2);
        let surr2 = tape.scale(clipped, advantage);
        let surrogate = tape.min(surr1, surr2).unwrap();
        assert!((tape.value(clipped).item() - 1.2).abs() < 1e-15);
        assert!((tape.value(surrogate).item() - 1.2 * advantage).abs() < 1e-15);
        // gradient flows through the clipped branch only, and the clamp
        // blocks it entirely outside [0.8, 1.2]
        let grads = tape.backward(surrogate).unwrap();
        assert_eq!(grads.get(ratio).data(), &[0.0]);
    }

    #[test]
    fn adam_descends_quadratic() {
        let mut params = ParamSet::new();
        let id = params.add("w", Tensor::vector(vec![5.0, -3.0]));
        let mut opt = Adam::new(0.1, &params);
        for _ in 0..500 {
            let g = Tensor::vector(params.get(id).data().iter().map(|v| 2.0 * v).collect());
            opt.step(&mut params, &[g]).unwrap();
        }
        assert!(params.get(id).data().iter().all(|v| v.abs() < 1e-2));
    }

    #[test]
    fn grad_norm_clipping() {
        let mut grads = vec![Tensor::vector(vec![3.0, 4.0])];
        let norm = clip_grad_norm(&mut grads, 1.0);
        assert!((norm - 5.0).abs() < 1e-12);
        let clipped = (grads[0].sq_norm()).sqrt();
        assert!((clipped - 1.0).abs() < 1e-12);

        let mut small = vec![Tensor::vector(vec![0.3, 0.4])];
        clip_grad_norm(&mut small, 1.0);
        assert_eq!(small[0].data(), &[0.3, 0.4]);
    }
}
