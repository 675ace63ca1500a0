//! The `tdfb` command line.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad usage or input, 3 I/O
//! failure. Every subcommand takes `--config FILE`, a `key = value` file
//! whose keys are long flag names; flags given on the command line win.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use tdfb_core::analysis::analyze;
use tdfb_core::compare::{compare_channels, median};
use tdfb_core::grad::finite_diff_report;
use tdfb_core::mel::mfsc;
use tdfb_core::synth::mixed_utterance;
use tdfb_core::trainer::{gen_toy_split, train_with, ToyTaskConfig, TrainConfig, DEFAULT_DEV_UTTERANCES, DEFAULT_TRAIN_UTTERANCES};
use tdfb_core::{LearningMode, MelSpec, TdFilterbank, SAMPLE_RATE};

use crate::error::{Error, Result};
use crate::exec::RayonExecutor;
use crate::formats::{self, atomic_write, FeatureFormat};
use crate::wav::load_wav;

/// Gradient checks fail at or above this relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Metrics file written by `train-toy`.
pub const METRICS_FILE: &str = "metrics.csv";
/// Checkpoint written by `train-toy`.
pub const CHECKPOINT_FILE: &str = "checkpoint.tdfw";

#[derive(Debug, Parser)]
#[command(name = "tdfb", version, about = "Learnable time-domain filterbanks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute MFSC or TD-filterbank features of a WAV file.
    Extract(ExtractArgs),
    /// Per-channel agreement between MFSC and the Gabor-initialized front-end.
    Compare(CompareArgs),
    /// Train a front-end and a linear frame classifier on the synthetic task.
    TrainToy(TrainToyArgs),
    /// Frequency responses, centres, bandwidths and analyticity of a filterbank.
    Analyze(AnalyzeArgs),
    /// Compare analytic gradients with central differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Frontend {
    Mfsc,
    Tdfb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Bin,
}

impl From<Format> for FeatureFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => FeatureFormat::Csv,
            Format::Bin => FeatureFormat::Bin,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long, value_enum)]
    pub frontend: Frontend,
    #[arg(long = "in", value_name = "WAV")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Filterbank checkpoint; the Gabor initialization when omitted.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long = "in", value_name = "WAV")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    #[arg(long, value_parser = parse_mode)]
    pub mode: LearningMode,
    /// Add a trainable pre-emphasis layer.
    #[arg(long)]
    pub preemph: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = TrainConfig::default().lr_frontend)]
    pub lr_frontend: f64,
    #[arg(long, default_value_t = TrainConfig::default().lr_head)]
    pub lr_head: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch)]
    pub batch: usize,
    #[arg(long, default_value_t = DEFAULT_TRAIN_UTTERANCES)]
    pub train_utterances: usize,
    #[arg(long, default_value_t = DEFAULT_DEV_UTTERANCES)]
    pub dev_utterances: usize,
    #[arg(long, default_value_t = ToyTaskConfig::default().snr_db, allow_negative_numbers = true)]
    pub snr_db: f64,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Filterbank checkpoint; the Gabor initialization when omitted.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_mode, default_value = "learn-all")]
    pub mode: LearningMode,
    /// Add a trainable pre-emphasis layer.
    #[arg(long)]
    pub preemph: bool,
    /// Test signal length in samples (800 to 4000).
    #[arg(long, default_value_t = 1200)]
    pub length: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<LearningMode, String> {
    s.parse::<LearningMode>().map_err(|e| e.to_string())
}

/// Parse `args` (program name first), run the command and return the exit
/// code. Output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse(&args) {
        Ok(cli) => cli,
        Err(ParseFailure::Clap(e)) => {
            let code = e.exit_code();
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
        Err(ParseFailure::Config(e)) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

enum ParseFailure {
    Clap(clap::Error),
    Config(Error),
}

fn parse(args: &[OsString]) -> std::result::Result<Cli, ParseFailure> {
    let strict = |args: &[OsString]| {
        let matches = Cli::command().try_get_matches_from(args).map_err(ParseFailure::Clap)?;
        Cli::from_arg_matches(&matches).map_err(ParseFailure::Clap)
    };
    // Required flags may come from the config file, so look for it first
    // with every argument optional.
    let Ok(matches) = relaxed_command().try_get_matches_from(args) else {
        return strict(args);
    };
    let Some((name, sub)) = matches.subcommand() else {
        return strict(args);
    };
    let Some(config) = sub.get_one::<PathBuf>("config") else {
        return strict(args);
    };
    let extra = config_args(name, sub, config).map_err(ParseFailure::Config)?;
    let mut merged = args.to_vec();
    merged.extend(extra);
    strict(&merged)
}

fn relaxed_command() -> clap::Command {
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        cmd = cmd.mut_subcommand(name, |s| s.mut_args(|a| a.required(false)));
    }
    cmd
}

/// Flags for the config-file entries not already given on the command line.
fn config_args(subcommand: &str, matches: &ArgMatches, path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
    let cmd = Cli::command();
    let sub = cmd.find_subcommand(subcommand).expect("known subcommand");
    let mut extra = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| Error::Config { path: path.to_path_buf(), line: i + 1, reason };
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key))
            .ok_or_else(|| bad(format!("unknown key '{key}' for {subcommand}")))?;
        if key == "config" {
            return Err(bad("config files cannot nest".into()));
        }
        if matches.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value {
                "true" | "1" | "yes" => extra.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                _ => return Err(bad(format!("'{value}' is not a boolean"))),
            },
            _ => extra.push(format!("--{key}={value}").into()),
        }
    }
    Ok(extra)
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Extract(a) => cmd_extract(&a, out),
        Command::Compare(a) => cmd_compare(&a, out),
        Command::TrainToy(a) => cmd_train_toy(&a, out),
        Command::Analyze(a) => cmd_analyze(&a, out),
        Command::Gradcheck(a) => cmd_gradcheck(&a, out),
    }
}

fn filterbank(checkpoint: Option<&Path>) -> Result<TdFilterbank> {
    match checkpoint {
        Some(p) => Ok(formats::load_checkpoint(p, LearningMode::Fixed)?.filterbank),
        None => Ok(TdFilterbank::build(&MelSpec::default(), LearningMode::Fixed, false, 0)?),
    }
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) {
    let _ = writeln!(out, "{line}");
}

pub fn cmd_extract(a: &ExtractArgs, out: &mut dyn Write) -> Result<i32> {
    let x = load_wav(&a.input)?;
    let features = match a.frontend {
        Frontend::Mfsc => {
            if a.checkpoint.is_some() {
                return Err(tdfb_core::Error::InvalidArgument("--checkpoint applies to the tdfb front-end only".into()).into());
            }
            mfsc(&x, &MelSpec::default())?
        }
        Frontend::Tdfb => filterbank(a.checkpoint.as_deref())?.forward(&x)?,
    };
    formats::save_features(&a.out, &features, a.format.into())?;
    say(out, format_args!("{} frames x {} channels -> {}", features.frames(), features.channels(), a.out.display()));
    Ok(0)
}

pub fn cmd_compare(a: &CompareArgs, out: &mut dyn Write) -> Result<i32> {
    let x = load_wav(&a.input)?;
    let reference = mfsc(&x, &MelSpec::default())?;
    let td = filterbank(None)?.forward(&x)?;
    let rows = compare_channels(&reference, &td)?;
    atomic_write(&a.out, formats::comparison_to_csv(&rows).as_bytes())?;
    let r: Vec<f64> = rows.iter().map(|c| c.pearson_r).collect();
    say(out, format_args!("median pearson_r {}", formats::fmt_f64(median(&r))));
    Ok(0)
}

pub fn cmd_train_toy(a: &TrainToyArgs, out: &mut dyn Write) -> Result<i32> {
    let task = ToyTaskConfig { snr_db: a.snr_db, ..ToyTaskConfig::default() }.with_seed(a.seed);
    let tc = TrainConfig { lr_frontend: a.lr_frontend, lr_head: a.lr_head, epochs: a.epochs, batch: a.batch, seed: a.seed };
    tc.validate()?;
    let split = gen_toy_split(&task, a.train_utterances, a.dev_utterances)?;
    let fb = TdFilterbank::build(&MelSpec::default(), a.mode, a.preemph, a.seed)?;
    let outcome = train_with(fb, &split, &tc, &RayonExecutor::from_env())?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    atomic_write(&a.out.join(METRICS_FILE), formats::metrics_to_csv(&outcome.metrics).as_bytes())?;
    formats::save_checkpoint(&a.out.join(CHECKPOINT_FILE), &outcome.filterbank, Some(&outcome.head))?;
    if let Some(m) = outcome.metrics.last() {
        say(out, format_args!("{} epoch {} train_loss {} dev_accuracy {}", a.mode, m.epoch, formats::fmt_f64(m.train_loss), formats::fmt_f64(m.dev_accuracy)));
    }
    Ok(0)
}

pub fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let fb = filterbank(a.checkpoint.as_deref())?;
    let report = analyze(&fb, SAMPLE_RATE as f64)?;
    formats::export_report(&report, &a.out)?;
    let edge = report.filters.iter().filter(|f| f.at_band_edge).count();
    say(out, format_args!("{} filters, mean r_a {}", report.filters.len(), formats::fmt_f64(report.mean_r_a())));
    if edge > 0 {
        say(out, format_args!("{edge} filters peak at or spread past the band edge"));
    }
    Ok(0)
}

pub fn cmd_gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> Result<i32> {
    let x = mixed_utterance(a.seed, a.length as f64 / SAMPLE_RATE as f64)?;
    let fb = TdFilterbank::build(&MelSpec::default(), a.mode, a.preemph, a.seed)?;
    let report = finite_diff_report(&fb, &x, a.seed)?;
    for (block, n, err) in &report.per_block {
        say(out, format_args!("{block:?}: {n} entries, max relative error {err:.3e}"));
    }
    say(out, format_args!("max relative error {:.3e}", report.max_rel_error));
    Ok(if report.max_rel_error < GRADCHECK_TOLERANCE { 0 } else { 1 })
}
