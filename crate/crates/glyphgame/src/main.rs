//! Command-line interface: train, eval, analyze, render-debug.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use glyphgame::agents::ActionMode;
use glyphgame::analysis::{
    collect_symbols, consistency_report, default_min_samples, EntityScheme,
};
use glyphgame::checkpoint::Checkpoint;
use glyphgame::config::RunConfig;
use glyphgame::error::{Error, Result};
use glyphgame::pngio::save_canvas_png;
use glyphgame::render::{rasterize_stroke, Brushstroke};
use glyphgame::rng::{streams, RngStream};
use glyphgame::trainer::{evaluate, train};

#[derive(Parser)]
#[command(
    name = "glyphgame",
    version,
    about = "Referential writing game: train agents, evaluate checkpoints, analyze the emergent writing system."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    /// Group symbols by target class.
    Target,
    /// Group symbols by target class and distractor classes.
    TargetDistractors,
}

impl From<SchemeArg> for EntityScheme {
    fn from(s: SchemeArg) -> EntityScheme {
        match s {
            SchemeArg::Target => EntityScheme::Target,
            SchemeArg::TargetDistractors => EntityScheme::TargetAndDistractors,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train sender and receiver as configured; writes metrics.csv and
    /// checkpoints into the configured output directory.
    Train {
        /// Path to a TOML run configuration.
        config: PathBuf,
        /// Suppress per-1000-episode progress lines.
        #[arg(long)]
        quiet: bool,
    },
    /// Greedy evaluation of a checkpoint over fresh trials.
    Eval {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Where to write the one-row result CSV.
        #[arg(long, default_value = "eval.csv")]
        csv: PathBuf,
    },
    /// Consistency analysis of a trained sender: per-entity heatmaps,
    /// VoL scores, and the pooled baseline.
    Analyze {
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value_t = SchemeArg::Target)]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value = "analysis")]
        out_dir: PathBuf,
        /// Trial-sampling seed; defaults to the checkpoint's run seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Sample stroke actions instead of taking them greedily.
        #[arg(long)]
        sample: bool,
        /// Minimum symbols per entity; defaults to 1 (target scheme)
        /// or 5 (target-distractors scheme).
        #[arg(long)]
        min_samples: Option<usize>,
    },
    /// Rasterize a single brushstroke to a PNG.
    RenderDebug {
        /// x0 y0 cx cy x1 y1 thickness intensity, each in [0,1].
        #[arg(num_args = 8, value_names = ["X0", "Y0", "CX", "CY", "X1", "Y1", "THICKNESS", "INTENSITY"])]
        params: Vec<f64>,
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value = "stroke.png")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train { config, quiet } => cmd_train(&config, quiet),
        Command::Eval {
            checkpoint,
            episodes,
            seed,
            csv,
        } => cmd_eval(&checkpoint, episodes, seed, &csv),
        Command::Analyze {
            checkpoint,
            scheme,
            trials,
            out_dir,
            seed,
            sample,
            min_samples,
        } => cmd_analyze(
            &checkpoint,
            scheme.into(),
            trials,
            &out_dir,
            seed,
            sample,
            min_samples,
        ),
        Command::RenderDebug { params, size, out } => cmd_render_debug(&params, size, &out),
    }
}

/// Load a checkpoint named on the command line; a missing or
/// unreadable path is a usage error.
fn load_checkpoint_arg(path: &PathBuf) -> Result<Checkpoint> {
    Checkpoint::load(path).map_err(|e| match e {
        Error::Io { path, source } => {
            Error::InvalidInput(format!("cannot read checkpoint {path}: {source}"))
        }
        other => other,
    })
}

fn cmd_train(config_path: &PathBuf, quiet: bool) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    // surface missing feature files before any work happens
    let _ = cfg.build_dataset().map_err(|e| match e {
        Error::Io { path, source } => {
            Error::Config(format!("dataset file {path} is unusable: {source}"))
        }
        other => other,
    })?;
    let report = train(&cfg, !quiet)?;
    println!(
        "trained {} episodes; final success (last 1000) = {:.4}",
        report.episodes_run, report.final_success_ma
    );
    println!("metrics: {}", report.metrics_path.display());
    println!("checkpoint: {}", report.checkpoint_path.display());
    Ok(())
}

fn cmd_eval(checkpoint: &PathBuf, episodes: usize, seed: u64, csv: &PathBuf) -> Result<()> {
    if episodes == 0 {
        return Err(Error::InvalidInput("--episodes must be ≥ 1".into()));
    }
    let ck = load_checkpoint_arg(checkpoint)?;
    let (sender, receiver, dataset, game) = ck.restore()?;
    let rate = evaluate(&sender, &receiver, &dataset, &game, episodes, seed)?;
    println!("success_rate {rate:.6} over {episodes} episodes");
    let body = format!("episodes,success_rate\n{episodes},{rate:.6}\n");
    std::fs::write(csv, body).map_err(|e| Error::io(csv.display().to_string(), e))?;
    Ok(())
}

fn cmd_analyze(
    checkpoint: &PathBuf,
    scheme: EntityScheme,
    trials: usize,
    out_dir: &PathBuf,
    seed: Option<u64>,
    sample: bool,
    min_samples: Option<usize>,
) -> Result<()> {
    let ck = load_checkpoint_arg(checkpoint)?;
    let (sender, _receiver, dataset, game) = ck.restore()?;
    let seed = seed.unwrap_or(game.seed);
    let mut rng = RngStream::new(seed, streams::ANALYSIS);
    let mode = if sample {
        ActionMode::Sample
    } else {
        ActionMode::Greedy
    };
    let groups = collect_symbols(&sender, &dataset, &game, scheme, trials, &mut rng, mode)?;
    let min_samples = min_samples.unwrap_or_else(|| default_min_samples(scheme));
    let report = consistency_report(&groups, scheme, min_samples)?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let csv_path = out_dir.join("report.csv");
    std::fs::write(&csv_path, report.to_csv())
        .map_err(|e| Error::io(csv_path.display().to_string(), e))?;
    for entity in &report.entities {
        let png = out_dir.join(format!("heatmap_{}.png", entity.key.label()));
        save_canvas_png(&entity.heatmap, &png)?;
    }

    println!(
        "scheme={:?} entities={} avg_score={:.6} baseline_score={:.6} ratio={:.3}",
        report.scheme,
        report.entities.len(),
        report.avg_score,
        report.baseline_score,
        report.avg_score / report.baseline_score
    );
    if !report.excluded.is_empty() {
        println!(
            "excluded {} entities below min_samples={} (see report)",
            report.excluded.len(),
            report.min_samples
        );
    }
    println!("report: {}", csv_path.display());
    Ok(())
}

fn cmd_render_debug(params: &[f64], size: usize, out: &PathBuf) -> Result<()> {
    let arr: [f64; 8] = params
        .try_into()
        .map_err(|_| Error::InvalidInput(format!("expected 8 parameters, got {}", params.len())))?;
    let stroke = Brushstroke::new(arr)?;
    let canvas = rasterize_stroke(&stroke, size)?;
    save_canvas_png(&canvas, out)?;
    println!(
        "wrote {} ({}x{}, ink mass {:.3})",
        out.display(),
        size,
        size,
        canvas.ink_mass()
    );
    Ok(())
}
