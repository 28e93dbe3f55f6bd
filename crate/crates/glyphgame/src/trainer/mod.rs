//! Joint PPO training of sender and receiver.
//!
//! Each batch: collect episodes with the current policies, compute
//! GAE advantages (normalized per batch and per agent), then run
//! several epochs of clipped-surrogate updates over shuffled episode
//! minibatches. The receiver's single decision is treated as a
//! one-step episode. Sender and receiver keep separate Adam
//! optimizers and are updated simultaneously.
//!
//! Replayed log-probs reuse exactly the forward path that produced
//! the behavior log-probs, so first-epoch importance ratios are 1 to
//! machine precision.

pub mod gae;
pub mod rollout;

use std::collections::VecDeque;
use std::io::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{ActionMode, ReceiverPolicy, SenderPolicy};
use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::game::{Episode, GameConfig};
use crate::nn::{clip_grad_norm, Adam, NodeId, ParamSet, Tape, Tensor};
use crate::rng::{streams, RngStream};

pub use gae::{gae_advantages, normalize_advantages};
pub use rollout::{collect_rollouts, run_episode, sample_and_run, RolloutWorker};

/// Episodes replayed per tape during updates. Fixed so gradient
/// accumulation order (and thus every run) is independent of the
/// thread count.
const EPISODES_PER_TAPE: usize = 8;

/// PPO hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub clip_eps: f64,
    pub learning_rate: f64,
    pub epochs_per_batch: usize,
    pub episodes_per_batch: usize,
    /// Minibatch size in episodes.
    pub minibatch_size: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub total_episodes: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_eps: 0.2,
            learning_rate: 3e-4,
            epochs_per_batch: 4,
            episodes_per_batch: 256,
            minibatch_size: 64,
            gamma: 1.0,
            gae_lambda: 0.95,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            total_episodes: 100_000,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(Error::Config(format!(
                "clip_eps must be in (0,1), got {}",
                self.clip_eps
            )));
        }
        for (name, v) in [("gamma", self.gamma), ("gae_lambda", self.gae_lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0,1], got {v}")));
            }
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        for (name, v) in [
            ("epochs_per_batch", self.epochs_per_batch),
            ("episodes_per_batch", self.episodes_per_batch),
            ("minibatch_size", self.minibatch_size),
            ("total_episodes", self.total_episodes),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be ≥ 1")));
            }
        }
        Ok(())
    }
}

/// Training data for one episode's sender steps.
#[derive(Debug, Clone)]
pub struct SenderSample<'a> {
    pub episode: &'a Episode,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

/// Training data for one episode's receiver decision.
#[derive(Debug, Clone)]
pub struct ReceiverSample<'a> {
    pub episode: &'a Episode,
    pub advantage: f64,
    pub ret: f64,
}

/// GAE over a batch of episodes, with per-agent batch normalization
/// of the advantages.
pub fn prepare_batch<'a>(
    episodes: &'a [Episode],
    cfg: &PpoConfig,
) -> (Vec<SenderSample<'a>>, Vec<ReceiverSample<'a>>) {
    let mut sender = Vec::with_capacity(episodes.len());
    let mut receiver = Vec::with_capacity(episodes.len());
    for ep in episodes {
        let t = ep.sender_steps.len();
        let mut rewards = vec![0.0; t];
        rewards[t - 1] = ep.reward as f64;
        let values: Vec<f64> = ep.sender_steps.iter().map(|s| s.value).collect();
        let (advantages, returns) = gae_advantages(&rewards, &values, cfg.gamma, cfg.gae_lambda);
        sender.push(SenderSample {
            episode: ep,
            advantages,
            returns,
        });
        let (radv, rret) = gae_advantages(
            &[ep.reward as f64],
            &[ep.receiver.value],
            cfg.gamma,
            cfg.gae_lambda,
        );
        receiver.push(ReceiverSample {
            episode: ep,
            advantage: radv[0],
            ret: rret[0],
        });
    }

    let mut pooled: Vec<f64> = sender.iter().flat_map(|s| s.advantages.clone()).collect();
    normalize_advantages(&mut pooled);
    let mut it = pooled.into_iter();
    for s in &mut sender {
        for a in &mut s.advantages {
            *a = it.next().unwrap();
        }
    }

    let mut pooled: Vec<f64> = receiver.iter().map(|r| r.advantage).collect();
    normalize_advantages(&mut pooled);
    for (r, a) in receiver.iter_mut().zip(pooled) {
        r.advantage = a;
    }

    (sender, receiver)
}

/// Aggregate statistics from one PPO update.
#[derive(Debug, Clone, Copy, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    /// max |ratio − 1| observed; ~0 on the first epoch of a batch.
    pub max_ratio_deviation: f64,
    pub grad_norm: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct StatSums {
    policy_loss: f64,
    value_loss: f64,
    entropy: f64,
    clipped: usize,
    max_ratio_dev: f64,
    steps: usize,
}

impl StatSums {
    fn merge(&mut self, other: &StatSums) {
        self.policy_loss += other.policy_loss;
        self.value_loss += other.value_loss;
        self.entropy += other.entropy;
        self.clipped += other.clipped;
        self.max_ratio_dev = self.max_ratio_dev.max(other.max_ratio_dev);
        self.steps += other.steps;
    }
}

/// One PPO step-loss term. `new_logp`, `value`, `entropy` are tape
/// nodes; the rest are collection-time constants.
#[allow(clippy::too_many_arguments)]
fn ppo_step_loss(
    tape: &mut Tape,
    new_logp: NodeId,
    old_logp: f64,
    advantage: f64,
    ret: f64,
    value: NodeId,
    entropy: NodeId,
    cfg: &PpoConfig,
    stats: &mut StatSums,
) -> Result<NodeId> {
    let logdiff = tape.add_scalar(new_logp, -old_logp);
    let ratio = tape.exp(logdiff);
    let surr1 = tape.scale(ratio, advantage);
    let clipped = tape.clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    let surr2 = tape.scale(clipped, advantage);
    let surrogate = tape.min(surr1, surr2)?;
    let policy_loss = tape.scale(surrogate, -1.0);

    let vdiff = tape.add_scalar(value, -ret);
    let value_loss = tape.square(vdiff)?;

    let rv = tape.value(ratio).item();
    stats.policy_loss += tape.value(policy_loss).item();
    stats.value_loss += tape.value(value_loss).item();
    stats.entropy += tape.value(entropy).item();
    if (rv - 1.0).abs() > cfg.clip_eps {
        stats.clipped += 1;
    }
    stats.max_ratio_dev = stats.max_ratio_dev.max((rv - 1.0).abs());
    stats.steps += 1;

    let scaled_v = tape.scale(value_loss, cfg.value_coef);
    let neg_ent = tape.scale(entropy, -cfg.entropy_coef);
    let lv = tape.add(policy_loss, scaled_v)?;
    tape.add(lv, neg_ent)
}

/// Replay one episode's sender steps under current parameters and
/// build its summed PPO loss.
fn sender_episode_loss(
    tape: &mut Tape,
    policy: &SenderPolicy,
    bound: &crate::nn::BoundParams,
    sample: &SenderSample,
    cfg: &PpoConfig,
    stats: &mut StatSums,
) -> Result<NodeId> {
    let ep = sample.episode;
    let mut state = policy.zero_state(tape);
    let mut step_losses = Vec::with_capacity(ep.sender_steps.len());
    for (i, rec) in ep.sender_steps.iter().enumerate() {
        let fwd = policy.forward(tape, bound, &rec.canvas_before, state, &ep.visual_context)?;
        state = fwd.state;
        let mut logp_terms = Vec::with_capacity(9);
        let mut ent_terms = Vec::with_capacity(9);
        for (h, &logits) in fwd.stroke_logits.iter().enumerate() {
            logp_terms.push(tape.log_prob(logits, rec.bins[h])?);
            ent_terms.push(tape.entropy(logits)?);
        }
        let term_index = usize::from(rec.terminal);
        logp_terms.push(tape.log_prob(fwd.terminal_logits, term_index)?);
        ent_terms.push(tape.entropy(fwd.terminal_logits)?);
        let new_logp = sum_scalars(tape, &logp_terms)?;
        let entropy = sum_scalars(tape, &ent_terms)?;
        let loss = ppo_step_loss(
            tape,
            new_logp,
            rec.log_prob,
            sample.advantages[i],
            sample.returns[i],
            fwd.value,
            entropy,
            cfg,
            stats,
        )?;
        step_losses.push(loss);
    }
    sum_scalars(tape, &step_losses)
}

fn receiver_episode_loss(
    tape: &mut Tape,
    policy: &ReceiverPolicy,
    bound: &crate::nn::BoundParams,
    sample: &ReceiverSample,
    cfg: &PpoConfig,
    stats: &mut StatSums,
) -> Result<NodeId> {
    let ep = sample.episode;
    let fwd = policy.forward(tape, bound, &ep.symbol_image, &ep.trial.permuted)?;
    let new_logp = tape.log_prob(fwd.logits, ep.receiver.choice)?;
    let entropy = tape.entropy(fwd.logits)?;
    ppo_step_loss(
        tape,
        new_logp,
        ep.receiver.log_prob,
        sample.advantage,
        sample.ret,
        fwd.value,
        entropy,
        cfg,
        stats,
    )
}

fn sum_scalars(tape: &mut Tape, terms: &[NodeId]) -> Result<NodeId> {
    let mut acc = terms[0];
    for &t in &terms[1..] {
        acc = tape.add(acc, t)?;
    }
    Ok(acc)
}

/// Deterministic parallel gradient accumulation: chunk the minibatch
/// into fixed-size tape groups, differentiate each group's summed
/// loss, then reduce in chunk order.
fn accumulate_gradients<T: Sync>(
    params: &ParamSet,
    minibatch: &[&T],
    build: impl Fn(&mut Tape, &crate::nn::BoundParams, &T, &mut StatSums) -> Result<NodeId> + Sync,
) -> Result<(Vec<Tensor>, StatSums)> {
    let chunks: Vec<&[&T]> = minibatch.chunks(EPISODES_PER_TAPE).collect();
    let results: Result<Vec<(Vec<Tensor>, StatSums)>> = chunks
        .par_iter()
        .map(|chunk| {
            let mut tape = Tape::new();
            let bound = tape.bind(params);
            let mut stats = StatSums::default();
            let mut losses = Vec::with_capacity(chunk.len());
            for sample in chunk.iter() {
                losses.push(build(&mut tape, &bound, sample, &mut stats)?);
            }
            let total = sum_scalars(&mut tape, &losses)?;
            let lv = tape.value(total).item();
            if !lv.is_finite() {
                return Err(Error::NonFinite(format!(
                    "PPO loss {lv}; stats: policy={} value={} entropy={} over {} steps",
                    stats.policy_loss, stats.value_loss, stats.entropy, stats.steps
                )));
            }
            let grads = tape.backward(total)?;
            Ok((grads.for_params(&bound), stats))
        })
        .collect();

    let mut total_grads: Vec<Tensor> =
        params.tensors().iter().map(|t| Tensor::zeros(t.dims())).collect();
    let mut total_stats = StatSums::default();
    for (grads, stats) in results? {
        for (acc, g) in total_grads.iter_mut().zip(&grads) {
            for (a, v) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += v;
            }
        }
        total_stats.merge(&stats);
    }
    Ok((total_grads, total_stats))
}

fn finish_update(
    params: &mut ParamSet,
    opt: &mut Adam,
    mut grads: Vec<Tensor>,
    stats: StatSums,
    cfg: &PpoConfig,
    frozen: &[crate::nn::ParamId],
) -> Result<UpdateStats> {
    let steps = stats.steps.max(1) as f64;
    for g in &mut grads {
        for v in g.data_mut() {
            *v /= steps;
        }
    }
    for &pid in frozen {
        let g = &mut grads[pid.index()];
        for v in g.data_mut() {
            *v = 0.0;
        }
    }
    let grad_norm = clip_grad_norm(&mut grads, cfg.max_grad_norm);
    opt.step(params, &grads)?;
    Ok(UpdateStats {
        policy_loss: stats.policy_loss / steps,
        value_loss: stats.value_loss / steps,
        entropy: stats.entropy / steps,
        clip_fraction: stats.clipped as f64 / steps,
        max_ratio_deviation: stats.max_ratio_dev,
        grad_norm,
        steps: stats.steps,
    })
}

/// One clipped-surrogate gradient step on the sender over a minibatch
/// of episodes.
pub fn ppo_update_sender(
    policy: &mut SenderPolicy,
    opt: &mut Adam,
    minibatch: &[&SenderSample],
    cfg: &PpoConfig,
) -> Result<UpdateStats> {
    let (grads, stats) = {
        let p: &SenderPolicy = policy;
        accumulate_gradients(&p.params, minibatch, |tape, bound, sample, stats| {
            sender_episode_loss(tape, p, bound, sample, cfg, stats)
        })?
    };
    finish_update(&mut policy.params, opt, grads, stats, cfg, &[])
}

/// One clipped-surrogate gradient step on the receiver. When
/// `freeze_encoder` is set, symbol-encoder gradients are zeroed
/// (random-projection ablation).
pub fn ppo_update_receiver(
    policy: &mut ReceiverPolicy,
    opt: &mut Adam,
    minibatch: &[&ReceiverSample],
    cfg: &PpoConfig,
    freeze_encoder: bool,
) -> Result<UpdateStats> {
    let (grads, stats) = {
        let p: &ReceiverPolicy = policy;
        accumulate_gradients(&p.params, minibatch, |tape, bound, sample, stats| {
            receiver_episode_loss(tape, p, bound, sample, cfg, stats)
        })?
    };
    let frozen: Vec<crate::nn::ParamId> = if freeze_encoder {
        policy.encoder_param_ids().to_vec()
    } else {
        Vec::new()
    };
    finish_update(&mut policy.params, opt, grads, stats, cfg, &frozen)
}

/// One row of the training metrics log (every 1,000 episodes).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub episode: usize,
    pub success_ma: f64,
    pub sender_policy_loss: f64,
    pub receiver_policy_loss: f64,
    pub sender_entropy: f64,
    pub receiver_entropy: f64,
    pub clip_fraction: f64,
}

pub const METRICS_HEADER: &str =
    "episode,success_ma,sender_policy_loss,receiver_policy_loss,sender_entropy,receiver_entropy,clip_fraction";

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.episode,
            self.success_ma,
            self.sender_policy_loss,
            self.receiver_policy_loss,
            self.sender_entropy,
            self.receiver_entropy,
            self.clip_fraction
        )
    }
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub rows: Vec<MetricsRow>,
    pub episodes_run: usize,
    pub final_success_ma: f64,
    pub metrics_path: PathBuf,
    pub checkpoint_path: PathBuf,
    /// Set when `stop_at_success` ended the run before the budget.
    pub stopped_early: bool,
}

impl TrainReport {
    /// First logged episode count at which the success moving average
    /// reached `threshold`.
    pub fn first_reach(&self, threshold: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.success_ma >= threshold)
            .map(|r| r.episode)
    }
}

/// Run the full training loop described by `cfg`, writing metrics and
/// checkpoints under the configured output directory.
pub fn train(cfg: &RunConfig, verbose: bool) -> Result<TrainReport> {
    cfg.validate()?;
    let dataset = cfg.build_dataset()?;
    let game = cfg.game_config(&dataset);
    game.validate_for_training()?;
    let ppo = &cfg.ppo;

    let out_dir = PathBuf::from(&cfg.run.out_dir);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let metrics_path = out_dir.join("metrics.csv");
    let mut metrics_file = std::fs::File::create(&metrics_path)
        .map_err(|e| Error::io(metrics_path.display().to_string(), e))?;
    writeln!(metrics_file, "{METRICS_HEADER}")
        .map_err(|e| Error::io(metrics_path.display().to_string(), e))?;

    let mut init_rng = RngStream::new(game.seed, streams::INIT);
    let mut sender = SenderPolicy::new(cfg.sender_arch(&game), &mut init_rng);
    let mut receiver = ReceiverPolicy::new(cfg.receiver_arch(&game), &mut init_rng);
    let mut sender_opt = Adam::new(ppo.learning_rate, &sender.params);
    let mut receiver_opt = Adam::new(ppo.learning_rate, &receiver.params);
    let mut workers: Vec<RolloutWorker> = (0..cfg.run.workers)
        .map(|w| RolloutWorker::new(game.seed, w))
        .collect();
    let mut update_rng = RngStream::new(game.seed, streams::UPDATE);

    let mut ring: VecDeque<u32> = VecDeque::with_capacity(1000);
    let mut ring_sum: u32 = 0;
    let mut rows: Vec<MetricsRow> = Vec::new();
    let mut done = 0usize;
    let mut next_metric = 1000usize;
    let mut next_checkpoint = cfg.run.checkpoint_interval;
    let mut stopped_early = false;
    let mut last_sender_stats = UpdateStats::default();
    let mut last_receiver_stats = UpdateStats::default();

    while done < ppo.total_episodes && !stopped_early {
        let n = ppo.episodes_per_batch.min(ppo.total_episodes - done);
        let episodes = collect_rollouts(
            &sender,
            &receiver,
            &dataset,
            &game,
            &mut workers,
            n,
            ActionMode::Sample,
        )?;
        for ep in &episodes {
            if ring.len() == 1000 {
                ring_sum -= ring.pop_front().unwrap();
            }
            ring.push_back(ep.reward);
            ring_sum += ep.reward;
        }

        let (sender_samples, receiver_samples) = prepare_batch(&episodes, ppo);
        let mut sender_acc = UpdateStats::default();
        let mut receiver_acc = UpdateStats::default();
        let mut updates = 0usize;
        for _ in 0..ppo.epochs_per_batch {
            let mut order: Vec<usize> = (0..episodes.len()).collect();
            update_rng.shuffle(&mut order);
            for mb in order.chunks(ppo.minibatch_size) {
                let s_mb: Vec<&SenderSample> = mb.iter().map(|&i| &sender_samples[i]).collect();
                let r_mb: Vec<&ReceiverSample> =
                    mb.iter().map(|&i| &receiver_samples[i]).collect();
                let s = ppo_update_sender(&mut sender, &mut sender_opt, &s_mb, ppo)?;
                let r = ppo_update_receiver(
                    &mut receiver,
                    &mut receiver_opt,
                    &r_mb,
                    ppo,
                    cfg.model.freeze_symbol_encoder,
                )?;
                sender_acc = merge_stats(sender_acc, s);
                receiver_acc = merge_stats(receiver_acc, r);
                updates += 1;
            }
        }
        if updates > 0 {
            last_sender_stats = mean_stats(sender_acc, updates);
            last_receiver_stats = mean_stats(receiver_acc, updates);
        }

        done += n;
        while next_metric <= done {
            let ma = if ring.is_empty() {
                0.0
            } else {
                ring_sum as f64 / ring.len() as f64
            };
            let row = MetricsRow {
                episode: next_metric,
                success_ma: ma,
                sender_policy_loss: last_sender_stats.policy_loss,
                receiver_policy_loss: last_receiver_stats.policy_loss,
                sender_entropy: last_sender_stats.entropy,
                receiver_entropy: last_receiver_stats.entropy,
                clip_fraction: (last_sender_stats.clip_fraction
                    + last_receiver_stats.clip_fraction)
                    / 2.0,
            };
            writeln!(metrics_file, "{}", row.to_csv())
                .map_err(|e| Error::io(metrics_path.display().to_string(), e))?;
            if verbose {
                eprintln!("[train] {}", row.to_csv());
            }
            if let Some(th) = cfg.run.stop_at_success {
                if ma >= th {
                    stopped_early = true;
                }
            }
            rows.push(row);
            next_metric += 1000;
            if stopped_early {
                break;
            }
        }

        if cfg.run.checkpoint_interval > 0 && done >= next_checkpoint && !stopped_early {
            let path = out_dir.join(format!("checkpoint_{done:09}.glyc"));
            save_checkpoint(&path, cfg, &sender, &receiver, &workers, &update_rng)?;
            while next_checkpoint <= done {
                next_checkpoint += cfg.run.checkpoint_interval;
            }
        }
    }
    metrics_file
        .flush()
        .map_err(|e| Error::io(metrics_path.display().to_string(), e))?;

    let checkpoint_path = out_dir.join("checkpoint.glyc");
    save_checkpoint(
        &checkpoint_path,
        cfg,
        &sender,
        &receiver,
        &workers,
        &update_rng,
    )?;

    let final_success_ma = if ring.is_empty() {
        0.0
    } else {
        ring_sum as f64 / ring.len() as f64
    };
    let summary_path = out_dir.join("summary.txt");
    let summary = format!(
        "episodes: {done}\nfinal_success_ma: {final_success_ma:.6}\nstopped_early: {stopped_early}\n"
    );
    std::fs::write(&summary_path, summary)
        .map_err(|e| Error::io(summary_path.display().to_string(), e))?;

    Ok(TrainReport {
        rows,
        episodes_run: done,
        final_success_ma,
        metrics_path,
        checkpoint_path,
        stopped_early,
    })
}

fn merge_stats(mut acc: UpdateStats, s: UpdateStats) -> UpdateStats {
    acc.policy_loss += s.policy_loss;
    acc.value_loss += s.value_loss;
    acc.entropy += s.entropy;
    acc.clip_fraction += s.clip_fraction;
    acc.max_ratio_deviation = acc.max_ratio_deviation.max(s.max_ratio_deviation);
    acc.grad_norm += s.grad_norm;
    acc.steps += s.steps;
    acc
}

fn mean_stats(acc: UpdateStats, n: usize) -> UpdateStats {
    let k = n as f64;
    UpdateStats {
        policy_loss: acc.policy_loss / k,
        value_loss: acc.value_loss / k,
        entropy: acc.entropy / k,
        clip_fraction: acc.clip_fraction / k,
        max_ratio_deviation: acc.max_ratio_deviation,
        grad_norm: acc.grad_norm / k,
        steps: acc.steps,
    }
}

fn save_checkpoint(
    path: &std::path::Path,
    cfg: &RunConfig,
    sender: &SenderPolicy,
    receiver: &ReceiverPolicy,
    workers: &[RolloutWorker],
    update_rng: &RngStream,
) -> Result<()> {
    let mut rng_states = Vec::new();
    for w in workers {
        rng_states.push((w.trial_rng.stream(), w.trial_rng.word_pos()));
        rng_states.push((w.action_rng.stream(), w.action_rng.word_pos()));
    }
    rng_states.push((update_rng.stream(), update_rng.word_pos()));
    Checkpoint::new(cfg.clone(), rng_states, sender, receiver).save(path)
}

/// Greedy evaluation over fresh trials. Returns the success rate.
pub fn evaluate(
    sender: &SenderPolicy,
    receiver: &ReceiverPolicy,
    dataset: &Dataset,
    game: &GameConfig,
    n_episodes: usize,
    seed: u64,
) -> Result<f64> {
    if n_episodes == 0 {
        return Err(Error::InvalidInput("evaluation needs ≥ 1 episode".into()));
    }
    let mut worker = RolloutWorker {
        trial_rng: RngStream::new(seed, streams::EVAL),
        action_rng: RngStream::new(seed, streams::action(usize::MAX / 2)),
    };
    let mut successes = 0usize;
    for _ in 0..n_episodes {
        let ep = sample_and_run(
            sender,
            receiver,
            dataset,
            game,
            &mut worker,
            ActionMode::Greedy,
        )?;
        successes += ep.reward as usize;
    }
    Ok(successes as f64 / n_episodes as f64)
}
