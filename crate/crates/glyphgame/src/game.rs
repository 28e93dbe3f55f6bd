//! Referential game structure: trials, candidate permutation, the
//! payoff rule, and episode records.
//!
//! A trial pairs one target item with K−1 distractors; the receiver
//! sees the candidates in a uniformly drawn permutation and must point
//! at the target. Both agents get payoff 1 exactly when the receiver's
//! final choice lands on the target position, and 0 at every other
//! step and outcome.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureVec};
use crate::render::{Canvas, Compositing, Message};
use crate::rng::RngStream;

/// What the sender is allowed to observe about a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SenderMode {
    /// Target features only.
    DAgnostic,
    /// Target plus a pooled summary of the distractors.
    DAware,
}

/// Game-level configuration shared by trainer, evaluation, and
/// analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// K: how many candidates the receiver chooses among.
    pub num_candidates: usize,
    /// L: maximum message length in strokes.
    pub max_strokes: usize,
    pub sender_mode: SenderMode,
    /// Square canvas side in pixels.
    pub canvas_size: usize,
    /// Dimension of candidate feature vectors.
    pub feature_dim: usize,
    /// Root seed all named streams derive from.
    pub seed: u64,
    /// When set, all candidates in a trial carry distinct classes.
    pub class_disjoint: bool,
    pub compositing: Compositing,
}

impl GameConfig {
    /// Structural checks. K = 1 is allowed here (useful in tests);
    /// training additionally requires K ≥ 2.
    pub fn validate(&self) -> Result<()> {
        if self.num_candidates < 1 {
            return Err(Error::Config("num_candidates must be ≥ 1".into()));
        }
        if self.max_strokes < 1 {
            return Err(Error::Config("max_strokes must be ≥ 1".into()));
        }
        if self.canvas_size < crate::render::MIN_CANVAS_SIZE {
            return Err(Error::Config(format!(
                "canvas_size must be ≥ {}",
                crate::render::MIN_CANVAS_SIZE
            )));
        }
        if self.feature_dim < 1 {
            return Err(Error::Config("feature_dim must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn validate_for_training(&self) -> Result<()> {
        self.validate()?;
        if self.num_candidates < 2 {
            return Err(Error::Config(
                "training needs num_candidates ≥ 2".into(),
            ));
        }
        Ok(())
    }
}

/// One sampled game instance.
#[derive(Debug, Clone)]
pub struct Trial {
    pub target: FeatureVec,
    pub distractors: Vec<FeatureVec>,
    pub target_class: u32,
    pub distractor_classes: Vec<u32>,
    /// Candidates in receiver order.
    pub permuted: Vec<FeatureVec>,
    /// Index of the target within `permuted`.
    pub target_position: usize,
}

/// Draw a target and K−1 distractors without replacement by item id
/// (and, when configured, with pairwise-distinct classes), then a
/// uniform permutation for the receiver.
pub fn sample_trial(dataset: &Dataset, config: &GameConfig, rng: &mut RngStream) -> Result<Trial> {
    let k = config.num_candidates;
    if dataset.len() < k {
        return Err(Error::Config(format!(
            "dataset has {} items but trials need {k}",
            dataset.len()
        )));
    }
    if config.class_disjoint && dataset.classes().len() < k {
        return Err(Error::Config(format!(
            "class-disjoint trials need ≥ {k} classes, dataset has {}",
            dataset.classes().len()
        )));
    }

    let target_idx = rng.below(dataset.len());
    let target = dataset.items()[target_idx].clone();

    let mut picked_ids = vec![target.item_id];
    let mut picked_classes = vec![target.class_id];
    let mut distractors = Vec::with_capacity(k - 1);
    let mut attempts = 0usize;
    while distractors.len() < k - 1 {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::Config(
                "could not sample distinct distractors; dataset too small or too few classes"
                    .into(),
            ));
        }
        let cand = &dataset.items()[rng.below(dataset.len())];
        if picked_ids.contains(&cand.item_id) {
            continue;
        }
        if config.class_disjoint && picked_classes.contains(&cand.class_id) {
            continue;
        }
        picked_ids.push(cand.item_id);
        picked_classes.push(cand.class_id);
        distractors.push(cand.clone());
    }

    let mut order: Vec<usize> = (0..k).collect();
    rng.shuffle(&mut order);
    let mut permuted = Vec::with_capacity(k);
    let mut target_position = 0;
    for (pos, &slot) in order.iter().enumerate() {
        if slot == 0 {
            target_position = pos;
            permuted.push(target.clone());
        } else {
            permuted.push(distractors[slot - 1].clone());
        }
    }

    let distractor_classes = distractors.iter().map(|d| d.class_id).collect();
    Ok(Trial {
        target_class: target.class_id,
        target,
        distractor_classes,
        distractors,
        permuted,
        target_position,
    })
}

/// The payoff rule: 1 iff the episode is at its final step and the
/// receiver's choice equals the target position; 0 otherwise. Both
/// agents receive the same value.
pub fn compute_reward(choice: usize, target_position: usize, is_final_step: bool) -> u32 {
    if is_final_step && choice == target_position {
        1
    } else {
        0
    }
}

/// Per-step sender record kept for the policy update.
#[derive(Debug, Clone)]
pub struct SenderStepRecord {
    /// Canvas state the sender observed before emitting this stroke.
    pub canvas_before: Canvas,
    pub bins: [usize; 8],
    pub terminal: bool,
    pub log_prob: f64,
    pub entropy: f64,
    pub value: f64,
}

/// The receiver's single decision.
#[derive(Debug, Clone)]
pub struct ReceiverRecord {
    pub choice: usize,
    pub log_prob: f64,
    pub entropy: f64,
    pub value: f64,
}

/// One complete episode transcript.
#[derive(Debug, Clone)]
pub struct Episode {
    pub trial: Trial,
    /// Sender's visual context for the trial.
    pub visual_context: Vec<f64>,
    pub message: Message,
    /// Final rendered symbol shown to the receiver.
    pub symbol_image: Canvas,
    pub sender_steps: Vec<SenderStepRecord>,
    pub receiver: ReceiverRecord,
    pub reward: u32,
}
