//! Writing-system consistency analysis.
//!
//! Symbols produced for the same entity (a target class, or a target
//! plus distractor-class combination) are averaged into a heatmap; a
//! consistent writing system keeps its strokes sharp under averaging
//! while an inconsistent one blurs out. Sharpness is measured as the
//! variance of the discrete Laplacian response over the heatmap
//! interior. The per-entity scores average into one consistency
//! score, compared against a baseline that pools every generated
//! symbol into a single heatmap.

use std::collections::BTreeMap;

use crate::agents::{sender_observe, ActionMode, SenderPolicy};
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::game::{sample_trial, GameConfig, Trial};
use crate::nn::Tape;
use crate::render::{render_incremental_with, stroke_from_action, Canvas};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

/// How symbols are grouped into entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityScheme {
    /// Group by target class.
    Target,
    /// Group by target class plus the (sorted) distractor classes.
    TargetAndDistractors,
}

/// Grouping key for one entity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EntityKey {
    pub scheme: EntityScheme,
    pub target_class: u32,
    /// Sorted ascending; empty under the `Target` scheme.
    pub distractor_classes: Vec<u32>,
}

impl EntityKey {
    pub fn from_trial(trial: &Trial, scheme: EntityScheme) -> Self {
        let distractor_classes = match scheme {
            EntityScheme::Target => Vec::new(),
            EntityScheme::TargetAndDistractors => {
                let mut cs = trial.distractor_classes.clone();
                cs.sort_unstable();
                cs
            }
        };
        EntityKey {
            scheme,
            target_class: trial.target_class,
            distractor_classes,
        }
    }

    /// Stable, filename-safe label: `t3` or `t3_d1-5`.
    pub fn label(&self) -> String {
        if self.distractor_classes.is_empty() {
            format!("t{}", self.target_class)
        } else {
            let ds: Vec<String> = self
                .distractor_classes
                .iter()
                .map(|c| c.to_string())
                .collect();
            format!("t{}_d{}", self.target_class, ds.join("-"))
        }
    }
}

/// Default minimum sample counts per entity before it enters the
/// score (deterministic greedy senders need only one symbol per
/// target).
pub fn default_min_samples(scheme: EntityScheme) -> usize {
    match scheme {
        EntityScheme::Target => 1,
        EntityScheme::TargetAndDistractors => 5,
    }
}

/// Run the sender alone over sampled trials and group the rendered
/// symbols by entity.
pub fn collect_symbols(
    sender: &SenderPolicy,
    dataset: &Dataset,
    config: &GameConfig,
    scheme: EntityScheme,
    n_trials: usize,
    rng: &mut RngStream,
    mode: ActionMode,
) -> Result<BTreeMap<EntityKey, Vec<Canvas>>> {
    let mut groups: BTreeMap<EntityKey, Vec<Canvas>> = BTreeMap::new();
    let bin_counts = sender.bin_counts();
    for _ in 0..n_trials {
        let trial = sample_trial(dataset, config, rng)?;
        let context = sender_observe(&trial, config.sender_mode);
        let mut tape = Tape::new();
        let bound = tape.bind(&sender.params);
        let mut state = sender.zero_state(&mut tape);
        let mut canvas = Canvas::blank(config.canvas_size);
        for step in 0..config.max_strokes {
            let (action, next) =
                sender.act(&mut tape, &bound, &canvas, state, &context, rng, mode)?;
            state = next;
            let stroke = stroke_from_action(&action.bins, &bin_counts)?;
            canvas = render_incremental_with(&canvas, &stroke, config.compositing)?;
            if action.terminal && step < config.max_strokes - 1 {
                break;
            }
        }
        groups
            .entry(EntityKey::from_trial(&trial, scheme))
            .or_default()
            .push(canvas);
    }
    Ok(groups)
}

/// Per-pixel mean of a non-empty set of equally sized canvases.
pub fn heatmap(symbols: &[Canvas]) -> Result<Canvas> {
    let first = symbols
        .first()
        .ok_or_else(|| Error::InvalidInput("heatmap of zero symbols".into()))?;
    let (w, h) = (first.width(), first.height());
    let mut acc = vec![0.0; w * h];
    for s in symbols {
        if s.width() != w || s.height() != h {
            return Err(Error::Shape(format!(
                "heatmap over mixed sizes {}x{} vs {w}x{h}",
                s.width(),
                s.height()
            )));
        }
        for (a, p) in acc.iter_mut().zip(s.pixels()) {
            *a += p;
        }
    }
    let n = symbols.len() as f64;
    for a in &mut acc {
        *a /= n;
    }
    Canvas::from_pixels(w, h, acc)
}

/// Population variance of the 4-neighbor Laplacian over the interior
/// (valid region, no padding). Zero iff the response is constant.
pub fn variance_of_laplacian(image: &Canvas) -> Result<f64> {
    let (w, h) = (image.width(), image.height());
    if w < 3 || h < 3 {
        return Err(Error::InvalidInput(format!(
            "variance of laplacian needs ≥ 3x3, got {w}x{h}"
        )));
    }
    let mut responses = Vec::with_capacity((w - 2) * (h - 2));
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            let lap = image.get(r - 1, c)
                + image.get(r + 1, c)
                + image.get(r, c - 1)
                + image.get(r, c + 1)
                - 4.0 * image.get(r, c);
            responses.push(lap);
        }
    }
    let n = responses.len() as f64;
    let mean = responses.iter().sum::<f64>() / n;
    Ok(responses.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n)
}

/// Mean of per-entity VoL scores.
pub fn consistency_score(entity_vols: &[f64]) -> Result<f64> {
    if entity_vols.is_empty() {
        return Err(Error::InvalidInput("no entities to score".into()));
    }
    Ok(entity_vols.iter().sum::<f64>() / entity_vols.len() as f64)
}

/// VoL of the heatmap pooling every generated symbol.
pub fn baseline_score(all_symbols: &[Canvas]) -> Result<f64> {
    variance_of_laplacian(&heatmap(all_symbols)?)
}

/// One entity's entry in the report.
#[derive(Debug, Clone)]
pub struct EntityReport {
    pub key: EntityKey,
    pub samples: usize,
    pub vol: f64,
    pub heatmap: Canvas,
}

/// Full consistency report for one scheme.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub scheme: EntityScheme,
    pub entities: Vec<EntityReport>,
    pub avg_score: f64,
    pub baseline_score: f64,
    /// Entities dropped for insufficient samples, with their counts.
    pub excluded: Vec<(EntityKey, usize)>,
    pub min_samples: usize,
}

/// Score grouped symbols: per-entity heatmap VoLs averaged into
/// `avg_score`, against the pooled-baseline VoL. Entities with fewer
/// than `min_samples` symbols are excluded from the average but still
/// pool into the baseline.
pub fn consistency_report(
    groups: &BTreeMap<EntityKey, Vec<Canvas>>,
    scheme: EntityScheme,
    min_samples: usize,
) -> Result<ConsistencyReport> {
    let mut entities = Vec::new();
    let mut excluded = Vec::new();
    let mut pool: Vec<Canvas> = Vec::new();
    for (key, symbols) in groups {
        pool.extend(symbols.iter().cloned());
        if symbols.len() < min_samples {
            excluded.push((key.clone(), symbols.len()));
            continue;
        }
        let hm = heatmap(symbols)?;
        let vol = variance_of_laplacian(&hm)?;
        entities.push(EntityReport {
            key: key.clone(),
            samples: symbols.len(),
            vol,
            heatmap: hm,
        });
    }
    if entities.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no entity reached min_samples = {min_samples}"
        )));
    }
    let vols: Vec<f64> = entities.iter().map(|e| e.vol).collect();
    let avg_score = consistency_score(&vols)?;
    let baseline = baseline_score(&pool)?;
    Ok(ConsistencyReport {
        scheme,
        entities,
        avg_score,
        baseline_score: baseline,
        excluded,
        min_samples,
    })
}

impl ConsistencyReport {
    /// CSV with columns `entity,samples,vol` plus summary rows for
    /// the averaged and baseline scores. Entities excluded for
    /// insufficient samples are listed with an empty vol field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("entity,samples,vol\n");
        for e in &self.entities {
            out.push_str(&format!("{},{},{:.9}\n", e.key.label(), e.samples, e.vol));
        }
        for (key, samples) in &self.excluded {
            out.push_str(&format!("{},{},\n", key.label(), samples));
        }
        out.push_str(&format!("avg_score,,{:.9}\n", self.avg_score));
        out.push_str(&format!("baseline_score,,{:.9}\n", self.baseline_score));
        out
    }
}
