//! The two policies: a recurrent stroke-emitting sender and a
//! candidate-pointing receiver.
//!
//! The sender encodes the current canvas and its visual context,
//! advances an LSTM, and emits eight categorical stroke-parameter
//! heads plus a 2-way terminal flag and a value estimate. Action
//! log-probs always sum over all nine heads.
//!
//! The receiver encodes the rendered symbol, scores each candidate
//! with one shared bilinear scorer (so its logits are exactly
//! permutation-equivariant in the candidates), and points at one.

use crate::encoder::SymbolEncoder;
use crate::error::{Error, Result};
use crate::features::FeatureVec;
use crate::game::{SenderMode, Trial};
use crate::nn::{
    argmax, categorical_entropy, categorical_log_prob, categorical_sample, init_uniform,
    lstm_step, BoundParams, LstmParams, LstmState, NodeId, ParamId, ParamSet, Tape, Tensor,
};
use crate::render::Canvas;
use crate::rng::RngStream;

/// Number of scalar parameters in a brushstroke (and stroke heads).
pub const STROKE_PARAMS: usize = 8;

/// Whether actions are drawn from the policy distribution or taken
/// greedily (argmax, lowest index on ties).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    Sample,
    Greedy,
}

/// Sender visual context for a trial: the target features alone, or
/// the target concatenated with an order-invariant summary (mean and
/// per-dimension max) of the distractors.
pub fn sender_observe(trial: &Trial, mode: SenderMode) -> Vec<f64> {
    match mode {
        SenderMode::DAgnostic => trial.target.values.clone(),
        SenderMode::DAware => {
            let d = trial.target.values.len();
            let mut out = Vec::with_capacity(3 * d);
            out.extend_from_slice(&trial.target.values);
            let n = trial.distractors.len();
            if n == 0 {
                out.extend(std::iter::repeat_n(0.0, 2 * d));
                return out;
            }
            let mut mean = vec![0.0; d];
            let mut max = vec![f64::NEG_INFINITY; d];
            for dist in &trial.distractors {
                for (k, &v) in dist.values.iter().enumerate() {
                    mean[k] += v;
                    if v > max[k] {
                        max[k] = v;
                    }
                }
            }
            for m in &mut mean {
                *m /= n as f64;
            }
            out.extend_from_slice(&mean);
            out.extend_from_slice(&max);
            out
        }
    }
}

/// Context vector length for a sender mode.
pub fn context_dim(mode: SenderMode, feature_dim: usize) -> usize {
    match mode {
        SenderMode::DAgnostic => feature_dim,
        SenderMode::DAware => 3 * feature_dim,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SenderArch {
    pub canvas_size: usize,
    pub context_dim: usize,
    pub encoder_dim: usize,
    pub hidden_dim: usize,
    /// Bins per stroke-parameter head.
    pub bins: usize,
}

/// Tape handles for one sender step.
pub struct SenderForward {
    pub stroke_logits: [NodeId; STROKE_PARAMS],
    pub terminal_logits: NodeId,
    pub value: NodeId,
    pub state: LstmState,
}

/// A sampled (or greedy) sender action with its bookkeeping.
#[derive(Debug, Clone)]
pub struct SenderAction {
    pub bins: [usize; STROKE_PARAMS],
    pub terminal: bool,
    pub log_prob: f64,
    pub entropy: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct SenderPolicy {
    pub arch: SenderArch,
    pub params: ParamSet,
    canvas_w: ParamId,
    canvas_b: ParamId,
    context_w: ParamId,
    context_b: ParamId,
    lstm: LstmParams,
    stroke_heads: Vec<(ParamId, ParamId)>,
    terminal_w: ParamId,
    terminal_b: ParamId,
    value_w: ParamId,
    value_b: ParamId,
}

impl SenderPolicy {
    pub fn new(arch: SenderArch, rng: &mut RngStream) -> Self {
        let mut params = ParamSet::new();
        let pixels = arch.canvas_size * arch.canvas_size;
        let canvas_w = params.add(
            "canvas.w",
            init_uniform(&[arch.encoder_dim, pixels], pixels, rng),
        );
        let canvas_b = params.add("canvas.b", init_uniform(&[arch.encoder_dim], pixels, rng));
        let context_w = params.add(
            "context.w",
            init_uniform(&[arch.encoder_dim, arch.context_dim], arch.context_dim, rng),
        );
        let context_b = params.add(
            "context.b",
            init_uniform(&[arch.encoder_dim], arch.context_dim, rng),
        );
        let lstm = LstmParams::init(
            &mut params,
            "lstm",
            2 * arch.encoder_dim,
            arch.hidden_dim,
            rng,
        );
        let mut stroke_heads = Vec::with_capacity(STROKE_PARAMS);
        for i in 0..STROKE_PARAMS {
            let w = params.add(
                &format!("stroke{i}.w"),
                init_uniform(&[arch.bins, arch.hidden_dim], arch.hidden_dim, rng),
            );
            let b = params.add(
                &format!("stroke{i}.b"),
                init_uniform(&[arch.bins], arch.hidden_dim, rng),
            );
            stroke_heads.push((w, b));
        }
        let terminal_w = params.add(
            "terminal.w",
            init_uniform(&[2, arch.hidden_dim], arch.hidden_dim, rng),
        );
        let terminal_b = params.add("terminal.b", init_uniform(&[2], arch.hidden_dim, rng));
        let value_w = params.add(
            "value.w",
            init_uniform(&[1, arch.hidden_dim], arch.hidden_dim, rng),
        );
        let value_b = params.add("value.b", init_uniform(&[1], arch.hidden_dim, rng));
        SenderPolicy {
            arch,
            params,
            canvas_w,
            canvas_b,
            context_w,
            context_b,
            lstm,
            stroke_heads,
            terminal_w,
            terminal_b,
            value_w,
            value_b,
        }
    }

    pub fn zero_state(&self, tape: &mut Tape) -> LstmState {
        self.lstm.zero_state(tape)
    }

    /// Bin counts for [`crate::render::stroke_from_action`].
    pub fn bin_counts(&self) -> Vec<usize> {
        vec![self.arch.bins; STROKE_PARAMS]
    }

    /// One recurrent step: encode canvas and context, advance the
    /// LSTM, and expose all head logits plus the value estimate.
    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        canvas: &Canvas,
        state: LstmState,
        context: &[f64],
    ) -> Result<SenderForward> {
        let pixels = self.arch.canvas_size * self.arch.canvas_size;
        if canvas.width() * canvas.height() != pixels {
            return Err(Error::Shape(format!(
                "sender expects {} canvas pixels, got {}",
                pixels,
                canvas.width() * canvas.height()
            )));
        }
        if context.len() != self.arch.context_dim {
            return Err(Error::Shape(format!(
                "sender expects context dim {}, got {}",
                self.arch.context_dim,
                context.len()
            )));
        }
        let canvas_in = tape.leaf(Tensor::vector(canvas.pixels().to_vec()));
        let canvas_feat = tape.affine(
            bound.node(self.canvas_w),
            canvas_in,
            bound.node(self.canvas_b),
        )?;
        let canvas_feat = tape.tanh(canvas_feat);
        let ctx_in = tape.leaf(Tensor::vector(context.to_vec()));
        let ctx_feat = tape.affine(
            bound.node(self.context_w),
            ctx_in,
            bound.node(self.context_b),
        )?;
        let ctx_feat = tape.tanh(ctx_feat);
        let x = tape.concat(&[canvas_feat, ctx_feat])?;
        let state = lstm_step(
            tape,
            x,
            state,
            bound.node(self.lstm.wx),
            bound.node(self.lstm.wh),
            bound.node(self.lstm.b),
            self.arch.hidden_dim,
        )?;

        let mut stroke_logits = [NodeId(0); STROKE_PARAMS];
        for (i, &(w, b)) in self.stroke_heads.iter().enumerate() {
            stroke_logits[i] = tape.affine(bound.node(w), state.h, bound.node(b))?;
        }
        let terminal_logits =
            tape.affine(bound.node(self.terminal_w), state.h, bound.node(self.terminal_b))?;
        let value_vec = tape.affine(bound.node(self.value_w), state.h, bound.node(self.value_b))?;
        let value = tape.index(value_vec, 0)?;
        Ok(SenderForward {
            stroke_logits,
            terminal_logits,
            value,
            state,
        })
    }

    /// Run one step and pick an action. The log-prob and entropy sum
    /// over all nine heads; termination policy (forcing the flag at
    /// the last allowed step) is the episode runner's concern.
    #[allow(clippy::too_many_arguments)]
    pub fn act(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        canvas: &Canvas,
        state: LstmState,
        context: &[f64],
        rng: &mut RngStream,
        mode: ActionMode,
    ) -> Result<(SenderAction, LstmState)> {
        let fwd = self.forward(tape, bound, canvas, state, context)?;
        let mut bins = [0usize; STROKE_PARAMS];
        let mut log_prob = 0.0;
        let mut entropy = 0.0;
        for (i, &logits) in fwd.stroke_logits.iter().enumerate() {
            let l = tape.value(logits);
            bins[i] = match mode {
                ActionMode::Sample => categorical_sample(l, rng),
                ActionMode::Greedy => argmax(l),
            };
            log_prob += categorical_log_prob(l, bins[i]);
            entropy += categorical_entropy(l);
        }
        let tl = tape.value(fwd.terminal_logits);
        let term_choice = match mode {
            ActionMode::Sample => categorical_sample(tl, rng),
            ActionMode::Greedy => argmax(tl),
        };
        log_prob += categorical_log_prob(tl, term_choice);
        entropy += categorical_entropy(tl);
        let action = SenderAction {
            bins,
            terminal: term_choice == 1,
            log_prob,
            entropy,
            value: tape.value(fwd.value).item(),
        };
        Ok((action, fwd.state))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceiverArch {
    pub canvas_size: usize,
    pub feature_dim: usize,
    pub encoder_dim: usize,
    pub symbol_dim: usize,
}

pub struct ReceiverForward {
    /// Length-K candidate scores.
    pub logits: NodeId,
    pub value: NodeId,
}

/// The receiver's single decision and its bookkeeping.
#[derive(Debug, Clone)]
pub struct ReceiverChoice {
    pub choice: usize,
    pub log_prob: f64,
    pub entropy: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct ReceiverPolicy {
    pub arch: ReceiverArch,
    pub params: ParamSet,
    pub encoder: SymbolEncoder,
    /// Bilinear form between symbol and candidate features.
    bilinear: ParamId,
    cand_w: ParamId,
    score_b: ParamId,
    value_w: ParamId,
    value_b: ParamId,
}

impl ReceiverPolicy {
    pub fn new(arch: ReceiverArch, rng: &mut RngStream) -> Self {
        let mut params = ParamSet::new();
        let encoder = SymbolEncoder::init(
            &mut params,
            arch.canvas_size,
            arch.encoder_dim,
            arch.symbol_dim,
            rng,
        );
        let bilinear = params.add(
            "scorer.bilinear",
            init_uniform(&[arch.symbol_dim, arch.feature_dim], arch.feature_dim, rng),
        );
        let cand_w = params.add(
            "scorer.cand_w",
            init_uniform(&[arch.feature_dim], arch.feature_dim, rng),
        );
        let score_b = params.add("scorer.b", init_uniform(&[1], arch.feature_dim, rng));
        let value_in = arch.symbol_dim + arch.feature_dim;
        let value_w = params.add(
            "value.w",
            init_uniform(&[1, value_in], value_in, rng),
        );
        let value_b = params.add("value.b", init_uniform(&[1], value_in, rng));
        ReceiverPolicy {
            arch,
            params,
            encoder,
            bilinear,
            cand_w,
            score_b,
            value_w,
            value_b,
        }
    }

    /// Score every candidate with shared weights:
    /// score_k = f_s(W)ᵀ·A·u_k + wᵀ·u_k + b.
    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        canvas: &Canvas,
        candidates: &[FeatureVec],
    ) -> Result<ReceiverForward> {
        if candidates.is_empty() {
            return Err(Error::InvalidInput("receiver needs ≥ 1 candidate".into()));
        }
        for c in candidates {
            if c.values.len() != self.arch.feature_dim {
                return Err(Error::Shape(format!(
                    "candidate dim {} vs expected {}",
                    c.values.len(),
                    self.arch.feature_dim
                )));
            }
        }
        let sym = self.encoder.encode(tape, bound, canvas)?;
        let mut scores = Vec::with_capacity(candidates.len());
        for cand in candidates {
            let u = tape.leaf(Tensor::vector(cand.values.clone()));
            let au = tape.matvec(bound.node(self.bilinear), u)?;
            let s_au = tape.dot(sym, au)?;
            let wu = tape.dot(bound.node(self.cand_w), u)?;
            let lin = tape.add(s_au, wu)?;
            let b = tape.index(bound.node(self.score_b), 0)?;
            scores.push(tape.add(lin, b)?);
        }
        let logits = tape.concat(&scores)?;

        let d = self.arch.feature_dim;
        let mut mean = vec![0.0; d];
        for cand in candidates {
            for (m, &v) in mean.iter_mut().zip(&cand.values) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= candidates.len() as f64;
        }
        let mean_node = tape.leaf(Tensor::vector(mean));
        let value_in = tape.concat(&[sym, mean_node])?;
        let value_vec = tape.affine(bound.node(self.value_w), value_in, bound.node(self.value_b))?;
        let value = tape.index(value_vec, 0)?;
        Ok(ReceiverForward { logits, value })
    }

    /// Choose a candidate on a throwaway tape.
    pub fn choose(
        &self,
        canvas: &Canvas,
        candidates: &[FeatureVec],
        rng: &mut RngStream,
        mode: ActionMode,
    ) -> Result<ReceiverChoice> {
        let mut tape = Tape::new();
        let bound = tape.bind(&self.params);
        let fwd = self.forward(&mut tape, &bound, canvas, candidates)?;
        let logits = tape.value(fwd.logits);
        let choice = match mode {
            ActionMode::Sample => categorical_sample(logits, rng),
            ActionMode::Greedy => argmax(logits),
        };
        Ok(ReceiverChoice {
            choice,
            log_prob: categorical_log_prob(logits, choice),
            entropy: categorical_entropy(logits),
            value: tape.value(fwd.value).item(),
        })
    }

    /// Parameter ids of the symbol encoder (for the frozen-encoder
    /// ablation).
    pub fn encoder_param_ids(&self) -> [ParamId; 4] {
        self.encoder.param_ids()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::streams;

    fn fv(values: Vec<f64>, item_id: u32, class_id: u32) -> FeatureVec {
        FeatureVec {
            values,
            item_id,
            class_id,
        }
    }

    fn trial_with(target: FeatureVec, distractors: Vec<FeatureVec>) -> Trial {
        let mut permuted = vec![target.clone()];
        permuted.extend(distractors.iter().cloned());
        Trial {
            target_class: target.class_id,
            distractor_classes: distractors.iter().map(|d| d.class_id).collect(),
            target,
            distractors,
            permuted,
            target_position: 0,
        }
    }

    #[test]
    fn agnostic_context_is_target_exactly() {
        let t = trial_with(
            fv(vec![1.0, -2.0], 0, 0),
            vec![fv(vec![3.0, 4.0], 1, 1), fv(vec![5.0, 6.0], 2, 2)],
        );
        assert_eq!(sender_observe(&t, SenderMode::DAgnostic), vec![1.0, -2.0]);
    }

    #[test]
    fn aware_context_hand_computed() {
        let t = trial_with(
            fv(vec![1.0, 0.0], 0, 0),
            vec![fv(vec![0.0, 1.0], 1, 1), fv(vec![0.0, 3.0], 2, 2)],
        );
        let v = sender_observe(&t, SenderMode::DAware);
        assert_eq!(v, vec![1.0, 0.0, 0.0, 2.0, 0.0, 3.0]);
    }

    #[test]
    fn aware_context_invariant_to_distractor_order() {
        let a = fv(vec![0.3, -0.5, 0.2], 1, 1);
        let b = fv(vec![-0.9, 0.4, 0.8], 2, 2);
        let target = fv(vec![0.1, 0.1, 0.1], 0, 0);
        let t1 = trial_with(target.clone(), vec![a.clone(), b.clone()]);
        let t2 = trial_with(target, vec![b, a]);
        assert_eq!(
            sender_observe(&t1, SenderMode::DAware),
            sender_observe(&t2, SenderMode::DAware)
        );
    }

    fn tiny_sender(bins: usize) -> SenderPolicy {
        let mut rng = RngStream::new(21, streams::INIT);
        SenderPolicy::new(
            SenderArch {
                canvas_size: 8,
                context_dim: 4,
                encoder_dim: 6,
                hidden_dim: 5,
                bins,
            },
            &mut rng,
        )
    }

    #[test]
    fn greedy_with_zero_params_picks_bin_zero_everywhere() {
        let mut policy = tiny_sender(8);
        for t in policy.params.tensors_mut() {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        let mut tape = Tape::new();
        let bound = tape.bind(&policy.params);
        let state = policy.zero_state(&mut tape);
        let canvas = Canvas::blank(8);
        let mut rng = RngStream::new(0, 0);
        let (action, _) = policy
            .act(
                &mut tape,
                &bound,
                &canvas,
                state,
                &[0.0; 4],
                &mut rng,
                ActionMode::Greedy,
            )
            .unwrap();
        assert_eq!(action.bins, [0; STROKE_PARAMS]);
        assert!(!action.terminal);
    }

    #[test]
    fn sampled_bins_are_uniform_under_flat_heads() {
        let mut policy = tiny_sender(8);
        for t in policy.params.tensors_mut() {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        let canvas = Canvas::blank(8);
        let mut rng = RngStream::new(99, streams::action(0));
        let n = 10_000;
        let mut counts = [0usize; 8];
        for _ in 0..n {
            let mut tape = Tape::new();
            let bound = tape.bind(&policy.params);
            let state = policy.zero_state(&mut tape);
            let (action, _) = policy
                .act(
                    &mut tape,
                    &bound,
                    &canvas,
                    state,
                    &[0.0; 4],
                    &mut rng,
                    ActionMode::Sample,
                )
                .unwrap();
            counts[action.bins[0]] += 1;
        }
        for (bin, &c) in counts.iter().enumerate() {
            let freq = c as f64 / n as f64;
            assert!((freq - 0.125).abs() < 0.02, "bin {bin} freq {freq}");
        }
    }

    #[test]
    fn log_prob_is_sum_of_per_head_log_probs() {
        let policy = tiny_sender(5);
        let mut canvas = Canvas::blank(8);
        canvas.set(2, 3, 0.8);
        let mut tape = Tape::new();
        let bound = tape.bind(&policy.params);
        let state = policy.zero_state(&mut tape);
        let context = [0.2, -0.4, 0.9, 0.0];
        let mut rng = RngStream::new(5, 0);
        let (action, _) = policy
            .act(
                &mut tape,
                &bound,
                &canvas,
                state,
                &context,
                &mut rng,
                ActionMode::Sample,
            )
            .unwrap();

        // recompute by hand from the forward logits
        let mut tape2 = Tape::new();
        let bound2 = tape2.bind(&policy.params);
        let state2 = policy.zero_state(&mut tape2);
        let fwd = policy
            .forward(&mut tape2, &bound2, &canvas, state2, &context)
            .unwrap();
        let mut expect = 0.0;
        for (i, &l) in fwd.stroke_logits.iter().enumerate() {
            expect += categorical_log_prob(tape2.value(l), action.bins[i]);
        }
        expect += categorical_log_prob(
            tape2.value(fwd.terminal_logits),
            if action.terminal { 1 } else { 0 },
        );
        assert_eq!(action.log_prob.to_bits(), expect.to_bits());
        assert!(action.log_prob <= 0.0 && action.log_prob.is_finite());
    }

    #[test]
    fn agnostic_step_ignores_distractors() {
        let policy = tiny_sender(6);
        let target = fv(vec![0.4, -0.1, 0.0, 0.9], 0, 0);
        let t1 = trial_with(target.clone(), vec![fv(vec![1.0; 4], 1, 1)]);
        let t2 = trial_with(target, vec![fv(vec![-1.0; 4], 2, 2)]);
        let c1 = sender_observe(&t1, SenderMode::DAgnostic);
        let c2 = sender_observe(&t2, SenderMode::DAgnostic);
        assert_eq!(c1, c2);
        let canvas = Canvas::blank(8);
        let mut tape = Tape::new();
        let bound = tape.bind(&policy.params);
        let state = policy.zero_state(&mut tape);
        let f1 = policy
            .forward(&mut tape, &bound, &canvas, state, &c1)
            .unwrap();
        let state2 = policy.zero_state(&mut tape);
        let f2 = policy
            .forward(&mut tape, &bound, &canvas, state2, &c2)
            .unwrap();
        for i in 0..STROKE_PARAMS {
            assert_eq!(
                tape.value(f1.stroke_logits[i]).data(),
                tape.value(f2.stroke_logits[i]).data()
            );
        }
    }

    fn tiny_receiver() -> ReceiverPolicy {
        let mut rng = RngStream::new(33, streams::INIT);
        ReceiverPolicy::new(
            ReceiverArch {
                canvas_size: 8,
                feature_dim: 4,
                encoder_dim: 6,
                symbol_dim: 5,
            },
            &mut rng,
        )
    }

    #[test]
    fn single_candidate_is_certain() {
        let policy = tiny_receiver();
        let canvas = Canvas::blank(8);
        let mut rng = RngStream::new(0, 0);
        let c = policy
            .choose(
                &canvas,
                &[fv(vec![0.1, 0.2, 0.3, 0.4], 0, 0)],
                &mut rng,
                ActionMode::Sample,
            )
            .unwrap();
        assert_eq!(c.choice, 0);
        assert_eq!(c.log_prob, 0.0);
    }

    #[test]
    fn zero_candidates_error() {
        let policy = tiny_receiver();
        let canvas = Canvas::blank(8);
        let mut rng = RngStream::new(0, 0);
        assert!(policy
            .choose(&canvas, &[], &mut rng, ActionMode::Sample)
            .is_err());
    }

    #[test]
    fn duplicated_candidates_choose_uniformly() {
        let policy = tiny_receiver();
        let mut canvas = Canvas::blank(8);
        canvas.set(4, 4, 1.0);
        let cand = fv(vec![0.3, -0.2, 0.5, 0.1], 0, 0);
        let candidates = vec![cand.clone(), cand.clone(), cand];
        let mut rng = RngStream::new(17, 0);
        let n = 10_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let c = policy
                .choose(&canvas, &candidates, &mut rng, ActionMode::Sample)
                .unwrap();
            counts[c.choice] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / n as f64;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "counts {counts:?}");
        }
    }

    #[test]
    fn greedy_choice_follows_the_candidate_through_permutation() {
        let policy = tiny_receiver();
        let mut canvas = Canvas::blank(8);
        canvas.set(2, 5, 0.9);
        canvas.set(6, 1, 0.4);
        let a = fv(vec![0.9, -0.3, 0.2, 0.8], 0, 0);
        let b = fv(vec![-0.5, 0.7, 0.1, -0.2], 1, 1);
        let c = fv(vec![0.0, 0.2, -0.9, 0.4], 2, 2);
        let mut rng = RngStream::new(0, 0);
        let first = policy
            .choose(
                &canvas,
                &[a.clone(), b.clone(), c.clone()],
                &mut rng,
                ActionMode::Greedy,
            )
            .unwrap();
        let original = [a.clone(), b.clone(), c.clone()];
        let winner = original[first.choice].item_id;
        let second = policy
            .choose(&canvas, &[c.clone(), a, b], &mut rng, ActionMode::Greedy)
            .unwrap();
        let shuffled = [c, original[0].clone(), original[1].clone()];
        assert_eq!(shuffled[second.choice].item_id, winner);
    }

    #[test]
    fn receiver_logits_are_permutation_equivariant() {
        let policy = tiny_receiver();
        let mut canvas = Canvas::blank(8);
        canvas.set(3, 3, 0.7);
        let cands = vec![
            fv(vec![0.9, -0.3, 0.2, 0.8], 0, 0),
            fv(vec![-0.5, 0.7, 0.1, -0.2], 1, 1),
            fv(vec![0.0, 0.2, -0.9, 0.4], 2, 2),
        ];
        let mut tape = Tape::new();
        let bound = tape.bind(&policy.params);
        let fwd = policy.forward(&mut tape, &bound, &canvas, &cands).unwrap();
        let base: Vec<f64> = tape.value(fwd.logits).data().to_vec();

        let perm = [2usize, 0, 1];
        let permuted: Vec<FeatureVec> = perm.iter().map(|&i| cands[i].clone()).collect();
        let mut tape2 = Tape::new();
        let bound2 = tape2.bind(&policy.params);
        let fwd2 = policy
            .forward(&mut tape2, &bound2, &canvas, &permuted)
            .unwrap();
        let got: Vec<f64> = tape2.value(fwd2.logits).data().to_vec();
        for (k, &src) in perm.iter().enumerate() {
            assert_eq!(got[k].to_bits(), base[src].to_bits());
        }
    }
}
