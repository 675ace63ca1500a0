use std::path::{Path, PathBuf};
use std::process::Command;

use tdfb::cli::{run, CHECKPOINT_FILE, METRICS_FILE};
use tdfb::core::synth::mixed_utterance;
use tdfb::core::{LearningMode, MelSpec, TdFilterbank};
use tdfb::formats::{load_checkpoint, load_features, HEATMAP_FILE, REPORT_FILE};
use tdfb::wav::save_wav;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn tdfb(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("tdfb").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn utterance(dir: &Path, seconds: f64) -> PathBuf {
    let path = dir.join("in.wav");
    save_wav(&path, mixed_utterance(3, seconds).unwrap().samples()).unwrap();
    path
}

#[test]
fn extract_gives_98_frames_per_second_for_both_frontends() {
    let dir = tempfile::tempdir().unwrap();
    let wav = utterance(dir.path(), 1.0);
    for (frontend, format) in [("mfsc", "csv"), ("tdfb", "csv"), ("tdfb", "bin")] {
        let out = dir.path().join(format!("{frontend}.{format}"));
        let r = tdfb(&["extract", "--frontend", frontend, "--in", s(&wav), "--out", s(&out), "--format", format]);
        assert_eq!(r.code, 0, "{}", r.err);
        assert_eq!(load_features(&out).unwrap().shape(), (98, 40));
    }
}

#[test]
fn missing_input_exits_2_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let r = tdfb(&["extract", "--frontend", "tdfb", "--in", "/nonexistent.wav", "--out", s(&dir.path().join("o.csv"))]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("/nonexistent.wav"), "{}", r.err);
    assert!(!dir.path().join("o.csv").exists());
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let wav = utterance(dir.path(), 0.5);
    let r = tdfb(&["extract", "--frontend", "mfsc", "--in", s(&wav), "--out", "/nonexistent/dir/o.csv"]);
    assert_eq!(r.code, 3, "{}", r.err);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(tdfb(&["extract", "--bogus"]).code, 2);
    assert_eq!(tdfb(&["train-toy", "--mode", "nonsense", "--out", "x"]).code, 2);
    assert_eq!(tdfb(&["frobnicate"]).code, 2);
}

#[test]
fn compare_on_silence_reports_nan_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("zero.wav");
    save_wav(&wav, &[0.0; 16000]).unwrap();
    let out = dir.path().join("cmp.csv");
    let r = tdfb(&["compare", "--in", s(&wav), "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.err);
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|l| l.split(',').nth(1) == Some("nan")));
}

#[test]
fn compare_on_speechlike_signal_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let wav = utterance(dir.path(), 1.0);
    let out = dir.path().join("cmp.csv");
    let r = tdfb(&["compare", "--in", s(&wav), "--out", s(&out)]);
    assert_eq!(r.code, 0);
    let median: f64 = r.out.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(median > 0.9, "{median}");
}

fn train_args(out: &Path, mode: &str) -> Vec<String> {
    ["train-toy", "--mode", mode, "--epochs", "2", "--train-utterances", "2", "--dev-utterances", "1", "--seed", "5", "--out", s(out)]
        .iter()
        .map(|a| a.to_string())
        .collect()
}

fn train(args: &[String]) -> Run {
    tdfb(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn train_toy_is_reproducible_and_fixed_mode_keeps_the_filterbank() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(train(&train_args(&a, "fixed")).code, 0);
    assert_eq!(train(&train_args(&b, "fixed")).code, 0);
    let metrics = std::fs::read(a.join(METRICS_FILE)).unwrap();
    assert_eq!(metrics, std::fs::read(b.join(METRICS_FILE)).unwrap());
    assert_eq!(String::from_utf8(metrics).unwrap().lines().count(), 3);
    let ckpt = load_checkpoint(&a.join(CHECKPOINT_FILE), LearningMode::Fixed).unwrap();
    let init = TdFilterbank::build(&MelSpec::default(), LearningMode::Fixed, false, 5).unwrap();
    assert_eq!(ckpt.filterbank.conv_weights(), init.conv_weights());
    assert_eq!(ckpt.filterbank.lowpass_weights(), init.lowpass_weights());
    assert_eq!(ckpt.head.unwrap().n_classes(), 6);
}

#[test]
fn analyze_reads_trained_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    assert_eq!(train(&train_args(&run_dir, "learn-filterbank")).code, 0);
    let report_dir = dir.path().join("report");
    let ckpt = run_dir.join(CHECKPOINT_FILE);
    let r = tdfb(&["analyze", "--checkpoint", s(&ckpt), "--out", s(&report_dir)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("mean r_a"));
    let csv = std::fs::read_to_string(report_dir.join(REPORT_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 41);
    assert_eq!(std::fs::read_to_string(report_dir.join(HEATMAP_FILE)).unwrap().lines().count(), 40);
}

#[test]
fn analyze_of_the_initialization_is_analytic_above_200_hz() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tdfb(&["analyze", "--out", s(dir.path())]).code, 0);
    let csv = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
    let mel = MelSpec::default();
    for (line, eta) in csv.lines().skip(1).zip(mel.centers()) {
        let r_a: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        if *eta >= 200.0 {
            assert!(r_a < 0.01, "{line}");
        }
    }
}

#[test]
fn gradcheck_default_passes() {
    let r = tdfb(&["gradcheck"]);
    assert_eq!(r.code, 0, "{}{}", r.out, r.err);
    assert!(r.out.contains("max relative error"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# toy run\nmode = fixed\nepochs = 3\ntrain-utterances = 2\ndev-utterances = 1\n").unwrap();
    let out = dir.path().join("o");
    let r = tdfb(&["train-toy", "--config", s(&cfg), "--epochs", "1", "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(std::fs::read_to_string(out.join(METRICS_FILE)).unwrap().lines().count(), 2);

    std::fs::write(&cfg, "mode = fixed\nlearning-rate = 1\n").unwrap();
    let r = tdfb(&["train-toy", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("run.cfg:2"), "{}", r.err);
}

#[test]
fn binary_reports_usage_errors() {
    let out = Command::new(env!("CARGO_BIN_EXE_tdfb")).args(["extract", "--frontend", "mfsc"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let help = Command::new(env!("CARGO_BIN_EXE_tdfb")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("train-toy"));
}
