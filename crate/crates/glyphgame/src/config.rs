//! Run configuration: a sectioned TOML file mirroring the component
//! configs. Unknown keys are hard errors so hyperparameter typos
//! cannot pass silently.

use serde::{Deserialize, Serialize};

use crate::agents::{context_dim, ReceiverArch, SenderArch};
use crate::error::{Error, Result};
use crate::features::{generate_synthetic_dataset, load_feature_file, Dataset};
use crate::game::{GameConfig, SenderMode};
use crate::render::Compositing;
use crate::trainer::PpoConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameSection {
    pub num_candidates: usize,
    pub max_strokes: usize,
    pub sender_mode: SenderMode,
    pub canvas_size: usize,
    pub class_disjoint: bool,
    pub compositing: Compositing,
}

impl Default for GameSection {
    fn default() -> Self {
        GameSection {
            num_candidates: 3,
            max_strokes: 2,
            sender_mode: SenderMode::DAware,
            canvas_size: 32,
            class_disjoint: true,
            compositing: Compositing::Max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// Width of the canvas/context encoders.
    pub encoder_dim: usize,
    /// LSTM hidden size.
    pub hidden_dim: usize,
    /// Symbol feature dimension d_s.
    pub symbol_dim: usize,
    /// Bins per stroke-parameter head.
    pub bins: usize,
    /// Keep the receiver's symbol encoder at its random init.
    pub freeze_symbol_encoder: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            encoder_dim: 128,
            hidden_dim: 128,
            symbol_dim: 32,
            bins: 8,
            freeze_symbol_encoder: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Synthetic,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub kind: DatasetKind,
    pub num_classes: usize,
    pub per_class: usize,
    pub feature_dim: usize,
    pub noise_sigma: f64,
    /// Feature file path; required when kind = "file".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            kind: DatasetKind::Synthetic,
            num_classes: 10,
            per_class: 100,
            feature_dim: 32,
            noise_sigma: 0.1,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub out_dir: String,
    /// Rollout workers. The run is deterministic for a fixed count.
    pub workers: usize,
    /// Episodes between periodic checkpoints; 0 disables them.
    pub checkpoint_interval: usize,
    /// End training once the success moving average reaches this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_at_success: Option<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 7,
            out_dir: "runs/out".into(),
            workers: 1,
            checkpoint_interval: 0,
            stop_at_success: None,
        }
    }
}

/// The full configuration of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub game: GameSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub run: RunSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.ppo.validate()?;
        if self.model.bins < 2 {
            return Err(Error::Config("model.bins must be ≥ 2".into()));
        }
        for (name, v) in [
            ("model.encoder_dim", self.model.encoder_dim),
            ("model.hidden_dim", self.model.hidden_dim),
            ("model.symbol_dim", self.model.symbol_dim),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be ≥ 1")));
            }
        }
        if self.run.workers == 0 {
            return Err(Error::Config("run.workers must be ≥ 1".into()));
        }
        match self.dataset.kind {
            DatasetKind::Synthetic => {
                if self.dataset.path.is_some() {
                    return Err(Error::Config(
                        "dataset.path is only valid with kind = \"file\"".into(),
                    ));
                }
            }
            DatasetKind::File => {
                if self.dataset.path.is_none() {
                    return Err(Error::Config(
                        "dataset.kind = \"file\" requires dataset.path".into(),
                    ));
                }
            }
        }
        // structural game checks that don't need the dataset
        if self.game.max_strokes == 0 {
            return Err(Error::Config("game.max_strokes must be ≥ 1".into()));
        }
        if self.game.canvas_size < crate::render::MIN_CANVAS_SIZE {
            return Err(Error::Config(format!(
                "game.canvas_size must be ≥ {}",
                crate::render::MIN_CANVAS_SIZE
            )));
        }
        Ok(())
    }

    /// Construct or load the dataset this run plays over.
    pub fn build_dataset(&self) -> Result<Dataset> {
        match self.dataset.kind {
            DatasetKind::Synthetic => generate_synthetic_dataset(
                self.dataset.num_classes,
                self.dataset.per_class,
                self.dataset.feature_dim,
                self.dataset.noise_sigma,
                self.run.seed,
            ),
            DatasetKind::File => {
                let path = self.dataset.path.as_ref().expect("validated");
                load_feature_file(path)
            }
        }
    }

    /// The game config for a concrete dataset.
    pub fn game_config(&self, dataset: &Dataset) -> GameConfig {
        GameConfig {
            num_candidates: self.game.num_candidates,
            max_strokes: self.game.max_strokes,
            sender_mode: self.game.sender_mode,
            canvas_size: self.game.canvas_size,
            feature_dim: dataset.dim(),
            seed: self.run.seed,
            class_disjoint: self.game.class_disjoint,
            compositing: self.game.compositing,
        }
    }

    pub fn sender_arch(&self, game: &GameConfig) -> SenderArch {
        SenderArch {
            canvas_size: game.canvas_size,
            context_dim: context_dim(game.sender_mode, game.feature_dim),
            encoder_dim: self.model.encoder_dim,
            hidden_dim: self.model.hidden_dim,
            bins: self.model.bins,
        }
    }

    pub fn receiver_arch(&self, game: &GameConfig) -> ReceiverArch {
        ReceiverArch {
            canvas_size: game.canvas_size,
            feature_dim: game.feature_dim,
            encoder_dim: self.model.encoder_dim,
            symbol_dim: self.model.symbol_dim,
        }
    }
}
