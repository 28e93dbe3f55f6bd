//! Episode execution and rollout collection.
//!
//! A full episode: the sender draws up to L strokes (each step sees
//! the intermediate canvas), the renderer composites them, and the
//! receiver makes one choice over the permuted candidates. Reward is
//! shared and terminal-only.
//!
//! Collection fans episodes out across workers, each owning its own
//! trial and action streams; worker outputs are concatenated in
//! worker order, so a run is reproducible for a fixed worker count
//! regardless of thread scheduling.

use rayon::prelude::*;

use crate::agents::{sender_observe, ActionMode, ReceiverPolicy, SenderPolicy};
use crate::error::Result;
use crate::features::Dataset;
use crate::game::{
    compute_reward, sample_trial, Episode, GameConfig, ReceiverRecord, SenderStepRecord, Trial,
};
use crate::render::{render_incremental_with, stroke_from_action, Canvas, Message};
use crate::rng::{streams, RngStream};
use crate::nn::Tape;

/// Per-worker random streams for rollout collection.
#[derive(Debug, Clone)]
pub struct RolloutWorker {
    pub trial_rng: RngStream,
    pub action_rng: RngStream,
}

impl RolloutWorker {
    pub fn new(seed: u64, worker: usize) -> Self {
        RolloutWorker {
            trial_rng: RngStream::new(seed, streams::trial(worker)),
            action_rng: RngStream::new(seed, streams::action(worker)),
        }
    }
}

/// Play one episode for a given trial.
pub fn run_episode(
    sender: &SenderPolicy,
    receiver: &ReceiverPolicy,
    trial: Trial,
    config: &GameConfig,
    rng: &mut RngStream,
    mode: ActionMode,
) -> Result<Episode> {
    let context = sender_observe(&trial, config.sender_mode);
    let mut tape = Tape::new();
    let bound = tape.bind(&sender.params);
    let mut state = sender.zero_state(&mut tape);
    let mut canvas = Canvas::blank(config.canvas_size);
    let mut steps = Vec::with_capacity(config.max_strokes);
    let mut strokes = Vec::with_capacity(config.max_strokes);
    let bin_counts = sender.bin_counts();

    let mut terminated_early = false;
    for step in 0..config.max_strokes {
        let canvas_before = canvas.clone();
        let (action, next_state) =
            sender.act(&mut tape, &bound, &canvas, state, &context, rng, mode)?;
        state = next_state;
        let stroke = stroke_from_action(&action.bins, &bin_counts)?;
        canvas = render_incremental_with(&canvas, &stroke, config.compositing)?;
        strokes.push(stroke);
        steps.push(SenderStepRecord {
            canvas_before,
            bins: action.bins,
            terminal: action.terminal,
            log_prob: action.log_prob,
            entropy: action.entropy,
            value: action.value,
        });
        // the flag ends the message early; the last step always ends it
        if action.terminal && step < config.max_strokes - 1 {
            terminated_early = true;
            break;
        }
    }

    let message = Message {
        strokes,
        terminated_early,
    };
    let symbol_image = canvas;
    let choice = receiver.choose(&symbol_image, &trial.permuted, rng, mode)?;
    let reward = compute_reward(choice.choice, trial.target_position, true);

    Ok(Episode {
        trial,
        visual_context: context,
        message,
        symbol_image,
        sender_steps: steps,
        receiver: ReceiverRecord {
            choice: choice.choice,
            log_prob: choice.log_prob,
            entropy: choice.entropy,
            value: choice.value,
        },
        reward,
    })
}

/// Sample a trial and play it.
pub fn sample_and_run(
    sender: &SenderPolicy,
    receiver: &ReceiverPolicy,
    dataset: &Dataset,
    config: &GameConfig,
    worker: &mut RolloutWorker,
    mode: ActionMode,
) -> Result<Episode> {
    let trial = sample_trial(dataset, config, &mut worker.trial_rng)?;
    run_episode(
        sender,
        receiver,
        trial,
        config,
        &mut worker.action_rng,
        mode,
    )
}

/// Split `total` episodes across workers: worker w takes
/// `total/n (+1 for the first total%n workers)`.
pub fn split_episodes(total: usize, workers: usize) -> Vec<usize> {
    let base = total / workers;
    let rem = total % workers;
    (0..workers)
        .map(|w| base + usize::from(w < rem))
        .collect()
}

/// Collect `total` sampled episodes, fanned out across the given
/// workers, concatenated in worker order.
pub fn collect_rollouts(
    sender: &SenderPolicy,
    receiver: &ReceiverPolicy,
    dataset: &Dataset,
    config: &GameConfig,
    workers: &mut [RolloutWorker],
    total: usize,
    mode: ActionMode,
) -> Result<Vec<Episode>> {
    let shares = split_episodes(total, workers.len());
    let per_worker: Result<Vec<Vec<Episode>>> = workers
        .par_iter_mut()
        .zip(shares)
        .map(|(worker, n)| {
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(sample_and_run(
                    sender, receiver, dataset, config, worker, mode,
                )?);
            }
            Ok(out)
        })
        .collect();
    Ok(per_worker?.into_iter().flatten().collect())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::agents::{context_dim, ReceiverArch, SenderArch};
    use crate::features::generate_synthetic_dataset;
    use crate::game::SenderMode;
    use crate::render::Compositing;

    pub(crate) fn small_setup(
        mode: SenderMode,
        k: usize,
        seed: u64,
    ) -> (SenderPolicy, ReceiverPolicy, Dataset, GameConfig) {
        let dataset = generate_synthetic_dataset(5, 6, 8, 0.1, seed).unwrap();
        let config = GameConfig {
            num_candidates: k,
            max_strokes: 2,
            sender_mode: mode,
            canvas_size: 8,
            feature_dim: dataset.dim(),
            seed,
            class_disjoint: true,
            compositing: Compositing::Max,
        };
        let mut init = RngStream::new(seed, streams::INIT);
        let sender = SenderPolicy::new(
            SenderArch {
                canvas_size: config.canvas_size,
                context_dim: context_dim(mode, dataset.dim()),
                encoder_dim: 10,
                hidden_dim: 10,
                bins: 4,
            },
            &mut init,
        );
        let receiver = ReceiverPolicy::new(
            ReceiverArch {
                canvas_size: config.canvas_size,
                feature_dim: dataset.dim(),
                encoder_dim: 10,
                symbol_dim: 6,
            },
            &mut init,
        );
        (sender, receiver, dataset, config)
    }

    #[test]
    fn episode_transcripts_are_deterministic() {
        let (sender, receiver, dataset, config) = small_setup(SenderMode::DAware, 3, 11);
        let run = || {
            let mut worker = RolloutWorker::new(11, 0);
            let ep =
                sample_and_run(&sender, &receiver, &dataset, &config, &mut worker, ActionMode::Sample)
                    .unwrap();
            (
                ep.trial.target.item_id,
                ep.message.strokes.len(),
                ep.receiver.choice,
                ep.reward,
                ep.sender_steps[0].log_prob.to_bits(),
                ep.symbol_image.pixels().iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
            )
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn episode_length_never_exceeds_max_strokes() {
        let (sender, receiver, dataset, config) = small_setup(SenderMode::DAgnostic, 3, 5);
        let mut worker = RolloutWorker::new(5, 0);
        for _ in 0..50 {
            let ep = sample_and_run(
                &sender, &receiver, &dataset, &config, &mut worker, ActionMode::Sample,
            )
            .unwrap();
            assert!(ep.message.len() <= config.max_strokes);
            assert!(!ep.sender_steps.is_empty());
            assert_eq!(ep.message.len(), ep.sender_steps.len());
            // early termination iff the flag fired before the last step
            if ep.message.len() < config.max_strokes {
                assert!(ep.message.terminated_early);
                assert!(ep.sender_steps.last().unwrap().terminal);
            }
        }
    }

    #[test]
    fn untrained_policies_hit_chance_reward() {
        let (sender, receiver, dataset, config) = small_setup(SenderMode::DAware, 3, 123);
        let mut workers = vec![RolloutWorker::new(123, 0)];
        let episodes = collect_rollouts(
            &sender, &receiver, &dataset, &config, &mut workers, 10_000, ActionMode::Sample,
        )
        .unwrap();
        let mean: f64 =
            episodes.iter().map(|e| e.reward as f64).sum::<f64>() / episodes.len() as f64;
        assert!(
            (mean - 1.0 / 3.0).abs() < 0.02,
            "mean reward {mean} not within 0.02 of 1/3"
        );
    }

    #[test]
    fn uniform_random_choice_hits_chance_for_any_k() {
        // the payoff rule alone: uniform receiver over K candidates
        let (sender, receiver, dataset, mut config) = small_setup(SenderMode::DAgnostic, 4, 9);
        config.class_disjoint = true;
        let mut worker = RolloutWorker::new(9, 0);
        let mut rng = RngStream::new(42, 777);
        let n = 10_000;
        let mut total = 0u32;
        for _ in 0..n {
            let ep = sample_and_run(
                &sender, &receiver, &dataset, &config, &mut worker, ActionMode::Sample,
            )
            .unwrap();
            let choice = rng.below(config.num_candidates);
            total += compute_reward(choice, ep.trial.target_position, true);
        }
        let mean = total as f64 / n as f64;
        assert!((mean - 0.25).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn split_covers_all_episodes() {
        assert_eq!(split_episodes(10, 3), vec![4, 3, 3]);
        assert_eq!(split_episodes(9, 3), vec![3, 3, 3]);
        assert_eq!(split_episodes(2, 4), vec![1, 1, 0, 0]);
    }

    #[test]
    fn worker_order_fixes_batch_composition() {
        let (sender, receiver, dataset, config) = small_setup(SenderMode::DAware, 3, 31);
        let collect = || {
            let mut workers: Vec<RolloutWorker> =
                (0..3).map(|w| RolloutWorker::new(31, w)).collect();
            collect_rollouts(
                &sender, &receiver, &dataset, &config, &mut workers, 32, ActionMode::Sample,
            )
            .unwrap()
            .iter()
            .map(|e| (e.trial.target.item_id, e.receiver.choice, e.reward))
            .collect::<Vec<_>>()
        };
        assert_eq!(collect(), collect());
    }
}
