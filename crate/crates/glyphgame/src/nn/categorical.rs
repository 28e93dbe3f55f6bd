//! Categorical distributions over logits.
//!
//! Sampling uses inverse-CDF on softmax probabilities; log-probs and
//! entropies go through max-subtracted logsumexp so logits up to ±1e4
//! never overflow. The same `logsumexp` routine backs both these plain
//! functions and the tape ops, so values recorded during rollout
//! collection match the replayed computation bit for bit.

use super::tensor::Tensor;
use crate::rng::RngStream;

/// log(Σ exp(x_i)) with max-subtraction.
pub fn logsumexp(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Softmax probabilities; sums to 1 up to rounding.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| (x - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|e| e / z).collect()
}

/// Draw an index from softmax(logits) by walking the CDF.
pub fn categorical_sample(logits: &Tensor, rng: &mut RngStream) -> usize {
    let probs = softmax(logits.data());
    let u = rng.uniform();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// log P(index) = logits[index] − logsumexp(logits).
pub fn categorical_log_prob(logits: &Tensor, index: usize) -> f64 {
    logits.data()[index] - logsumexp(logits.data())
}

/// Shannon entropy −Σ p log p of softmax(logits), in nats.
pub fn categorical_entropy(logits: &Tensor) -> f64 {
    let xs = logits.data();
    let lse = logsumexp(xs);
    let mut h = 0.0;
    for &x in xs {
        let logp = x - lse;
        h -= logp.exp() * logp;
    }
    h
}

/// Argmax with lowest-index tie-break.
pub fn argmax(logits: &Tensor) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in logits.data().iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}
