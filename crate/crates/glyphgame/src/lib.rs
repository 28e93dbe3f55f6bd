//! glyphgame: a two-agent referential game where communication is a
//! written symbol.
//!
//! A sender observes a target item (and optionally the distractors),
//! emits a short sequence of brushstrokes, and a deterministic
//! renderer paints them onto a grayscale canvas. A receiver looks at
//! the rendered symbol and must point at the target among shuffled
//! candidates. Both agents are trained jointly with PPO from the
//! shared terminal payoff alone. An analysis pass measures how
//! consistent the emergent writing system is per entity via the
//! variance-of-Laplacian sharpness of averaged symbol heatmaps.
//!
//! Components:
//! - [`game`]: trials, candidate permutation, payoff rule
//! - [`render`]: brushstroke rasterization and compositing
//! - [`features`]: synthetic datasets and the GLYF feature-file format
//! - [`nn`]: tensors, reverse-mode tape, LSTM step, Adam
//! - [`encoder`]: the symbol feature extractor
//! - [`agents`]: sender and receiver policies
//! - [`trainer`]: rollouts, GAE, PPO updates, the training loop
//! - [`analysis`]: heatmaps, VoL, consistency reports
//! - [`checkpoint`]: the GLYC checkpoint container
//! - [`config`]: the sectioned TOML run configuration

pub mod agents;
pub mod analysis;
mod binio;
pub mod checkpoint;
pub mod config;
pub mod encoder;
pub mod error;
pub mod features;
pub mod game;
pub mod nn;
pub mod pngio;
pub mod render;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
