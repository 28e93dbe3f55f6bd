//! End-to-end tests of the command-line interface: exit codes, file
//! outputs, and error reporting.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_glyphgame"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn glyphgame")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn smoke_config(dir: &Path, out_name: &str) -> std::path::PathBuf {
    let out_dir = dir.join(out_name);
    let text = format!(
        r#"
[game]
num_candidates = 3
max_strokes = 2
sender_mode = "d_aware"
canvas_size = 8

[model]
encoder_dim = 8
hidden_dim = 8
symbol_dim = 8
bins = 4

[ppo]
total_episodes = 1000
episodes_per_batch = 128
minibatch_size = 64
epochs_per_batch = 2

[dataset]
kind = "synthetic"
num_classes = 4
per_class = 5
feature_dim = 8
noise_sigma = 0.1

[run]
seed = 3
out_dir = "{}"
workers = 1
"#,
        out_dir.display()
    );
    let path = dir.join("smoke.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn train_smoke_writes_metrics_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path(), "out");
    let out = run(&["train", cfg.to_str().unwrap(), "--quiet"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let metrics = std::fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(
        lines.next().unwrap(),
        "episode,success_ma,sender_policy_loss,receiver_policy_loss,sender_entropy,receiver_entropy,clip_fraction"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1, "1000 episodes → one metrics row: {rows:?}");
    assert!(rows[0].starts_with("1000,"));
    assert!(dir.path().join("out/checkpoint.glyc").exists());
    assert!(dir.path().join("out/summary.txt").exists());
}

#[test]
fn train_rejects_missing_feature_file_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.toml");
    std::fs::write(
        &cfg_path,
        r#"
[ppo]
total_episodes = 1000

[dataset]
kind = "file"
path = "no/such/features.glyf"

[run]
out_dir = "out"
"#,
    )
    .unwrap();
    let out = run(&["train", cfg_path.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no/such/features.glyf"), "{stderr}");
}

#[test]
fn train_rejects_unknown_config_keys_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("typo.toml");
    std::fs::write(
        &cfg_path,
        "[ppo]\ntotal_episodes = 1000\nlearning_rt = 0.1\n\n[run]\nout_dir = \"out\"\n",
    )
    .unwrap();
    let out = run(&["train", cfg_path.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("learning_rt"), "{stderr}");
}

#[test]
fn eval_reports_rate_and_rejects_zero_episodes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path(), "out");
    let out = run(&["train", cfg.to_str().unwrap(), "--quiet"], dir.path());
    assert_eq!(code(&out), 0);
    let ck = dir.path().join("out/checkpoint.glyc");

    let csv = dir.path().join("eval.csv");
    let out = run(
        &[
            "eval",
            ck.to_str().unwrap(),
            "--episodes",
            "300",
            "--seed",
            "2",
            "--csv",
            csv.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("success_rate"), "{stdout}");
    assert!(stdout.contains("300 episodes"), "{stdout}");
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("episodes,success_rate\n300,"), "{body}");

    let out = run(
        &["eval", ck.to_str().unwrap(), "--episodes", "0"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn eval_rejects_corrupt_and_mismatched_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.glyc");
    std::fs::write(&bad, b"GLYCxxxx").unwrap();
    let out = run(&["eval", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 2);

    // version mismatch is reported distinctly
    let cfg = smoke_config(dir.path(), "out");
    let tr = run(&["train", cfg.to_str().unwrap(), "--quiet"], dir.path());
    assert_eq!(code(&tr), 0);
    let ck_path = dir.path().join("out/checkpoint.glyc");
    let mut bytes = std::fs::read(&ck_path).unwrap();
    bytes[4..8].copy_from_slice(&9u32.to_le_bytes());
    let wrong = dir.path().join("wrong_version.glyc");
    std::fs::write(&wrong, bytes).unwrap();
    let out = run(&["eval", wrong.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("version"), "{stderr}");
}

#[test]
fn analyze_writes_report_and_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path(), "out");
    let out = run(&["train", cfg.to_str().unwrap(), "--quiet"], dir.path());
    assert_eq!(code(&out), 0);
    let ck = dir.path().join("out/checkpoint.glyc");
    let an_dir = dir.path().join("an");

    let out = run(
        &[
            "analyze",
            ck.to_str().unwrap(),
            "--scheme",
            "target",
            "--trials",
            "200",
            "--out-dir",
            an_dir.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("avg_score"), "{stdout}");

    let report = std::fs::read_to_string(an_dir.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next().unwrap(), "entity,samples,vol");
    let rest: Vec<&str> = lines.collect();
    assert!(rest.iter().any(|l| l.starts_with("avg_score,,")));
    assert!(rest.iter().any(|l| l.starts_with("baseline_score,,")));
    // scored entity rows have a heatmap image each (excluded rows
    // carry an empty vol field and no image)
    let mut entity_rows = 0;
    for line in &rest {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() == 3 && cols[0].starts_with('t') && !cols[2].is_empty() {
            entity_rows += 1;
            assert!(
                an_dir.join(format!("heatmap_{}.png", cols[0])).exists(),
                "missing heatmap for {}",
                cols[0]
            );
        }
    }
    assert!(entity_rows > 0);
}

#[test]
fn render_debug_cases() {
    let dir = tempfile::tempdir().unwrap();

    // zero intensity renders an all-black image
    let out_png = dir.path().join("zero.png");
    let out = run(
        &[
            "render-debug",
            "0.2",
            "0.2",
            "0.5",
            "0.5",
            "0.8",
            "0.8",
            "0.5",
            "0.0",
            "--size",
            "16",
            "--out",
            out_png.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let img = image::open(&out_png).unwrap().to_luma8();
    assert!(img.pixels().all(|p| p.0[0] == 0));

    // a real stroke writes ink
    let inked = dir.path().join("inked.png");
    let out = run(
        &[
            "render-debug",
            "0.1",
            "0.5",
            "0.5",
            "0.5",
            "0.9",
            "0.5",
            "0.0",
            "1.0",
            "--size",
            "32",
            "--out",
            inked.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let img = image::open(&inked).unwrap().to_luma8();
    assert!(img.pixels().any(|p| p.0[0] > 0));

    // out-of-range parameter → exit 2
    let out = run(
        &[
            "render-debug",
            "1.5",
            "0.5",
            "0.5",
            "0.5",
            "0.9",
            "0.5",
            "0.0",
            "1.0",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);

    // wrong argument count → exit 2 with usage text
    let out = run(&["render-debug", "0.1", "0.2"], dir.path());
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.to_lowercase().contains("usage"), "{stderr}");
}

#[test]
fn train_runs_are_reproducible_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path(), "a");
    let out = run(&["train", cfg.to_str().unwrap(), "--quiet"], dir.path());
    assert_eq!(code(&out), 0);
    let ma = std::fs::read(dir.path().join("a/metrics.csv")).unwrap();
    let ca = std::fs::read(dir.path().join("a/checkpoint.glyc")).unwrap();

    // re-run the identical config into the same directory
    let out = run(&["train", cfg.to_str().unwrap(), "--quiet"], dir.path());
    assert_eq!(code(&out), 0);
    let mb = std::fs::read(dir.path().join("a/metrics.csv")).unwrap();
    let cb = std::fs::read(dir.path().join("a/checkpoint.glyc")).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(ca, cb);
}

#[test]
fn subcommands_reject_garbage_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["train", "does_not_exist.toml"], dir.path());
    assert_eq!(code(&out), 2);
    let out = run(&["analyze", "does_not_exist.glyc"], dir.path());
    assert_eq!(code(&out), 2);
    let out = run(&["eval", "does_not_exist.glyc"], dir.path());
    assert_eq!(code(&out), 2);
}
