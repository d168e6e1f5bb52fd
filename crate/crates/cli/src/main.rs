//! `csihar`: activity recognition experiments on CSI amplitude recordings.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use config::{CvArgs, DataArgs, FileConfig, KernelArgs, MaskArgs, SynthArgs, Source};
use csihar_core::dataset_io::{
    export_dataset_csv, load_dataset, load_dataset_cached, preprocess, preprocess_dataset,
    read_recording,
};
use csihar_core::evaluation::{cross_validate_dataset, mask_sweep, mask_sweep_csv};
use csihar_core::transform::{transform_sample, FeatureCsvWriter};
use csihar_core::{synthgen, ChannelMask, ClassifierBank, Dataset, DatasetConfig, KernelSet};

#[derive(Debug, Parser)]
#[command(name = "csihar", version, about = "Random-kernel activity recognition from WiFi CSI amplitudes")]
struct Cli {
    /// TOML file of `flag-name = value` defaults; command-line flags win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log more (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset in the recording CSV layout
    Synth(SynthCmd),
    /// Write kernels.csv and features.csv for a dataset
    Extract(ExtractCmd),
    /// Fit a classifier bank on a whole dataset and save it
    Train(TrainCmd),
    /// Classify recordings with a saved classifier bank
    Predict(PredictCmd),
    /// Cross-validate the pipeline and write the reports
    Evaluate(EvaluateCmd),
}

#[derive(Debug, Args)]
struct SynthCmd {
    /// Number of classes (at most 7 for CSV export) [default: 6]
    #[arg(long)]
    classes: Option<String>,
    /// Sampling rate written to the timestamps in Hz [default: 1000]
    #[arg(long, value_name = "HZ")]
    rate: Option<f64>,
    /// Output directory [default: .]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(flatten)]
    synth: SynthArgs,
}

#[derive(Debug, Args)]
struct ExtractCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    kernels: KernelArgs,
    /// Output directory [default: .]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    kernels: KernelArgs,
    /// Where to save the classifier bank
    #[arg(long, value_name = "FILE", default_value = "model.bin")]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct PredictCmd {
    /// Classifier bank written by `train`
    #[arg(long, value_name = "FILE", default_value = "model.bin")]
    model: PathBuf,
    /// Recording CSV files
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Sampling rate of the recordings in Hz [default: 1000]
    #[arg(long, value_name = "HZ")]
    source_rate: Option<f64>,
    /// Rate after decimation in Hz [default: 500]
    #[arg(long, value_name = "HZ")]
    target_rate: Option<f64>,
    #[command(flatten)]
    mask: MaskArgs,
}

#[derive(Debug, Args)]
struct EvaluateCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    kernels: KernelArgs,
    #[command(flatten)]
    cv: CvArgs,
    #[command(flatten)]
    mask: MaskArgs,
    /// Also re-vote under every non-empty set of antennas (mask_sweep.csv)
    #[arg(long)]
    sweep: bool,
    /// Output directory [default: .]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let missing = e
                .chain()
                .any(|c| matches!(c.downcast_ref(), Some(csihar_core::Error::MissingPath(_))));
            ExitCode::from(if missing { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    if let Some(n) = cli.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    match cli.command {
        Command::Synth(cmd) => synth(cmd, &file),
        Command::Extract(cmd) => extract(cmd, &file),
        Command::Train(cmd) => train(cmd, &file),
        Command::Predict(cmd) => predict(cmd, &file),
        Command::Evaluate(cmd) => evaluate(cmd, &file),
    }
}

fn out_dir(flag: Option<PathBuf>, file: &FileConfig) -> Result<PathBuf> {
    let dir = flag.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

/// Loads (or generates) and preprocesses the dataset.
fn dataset(args: &DataArgs, file: &FileConfig) -> Result<Dataset> {
    let settings = config::resolve_data(args, file)?;
    match settings.source {
        Source::Synth(spec) => {
            println!(
                "synthetic data: classes={} channels={} length={} per_class={} snr_db={} synth_seed={}",
                spec.classes, spec.channels, spec.length, spec.samples_per_class, spec.snr_db, spec.seed
            );
            let raw = synthgen::generate(&spec)?;
            Ok(preprocess_dataset(&raw, &settings.dataset)?)
        }
        Source::Dir(dir) => {
            let (ds, report) = match &settings.cache {
                Some(cache) => load_dataset_cached(&dir, &settings.dataset, cache),
                None => load_dataset(&dir, &settings.dataset),
            }
            .with_context(|| format!("loading dataset {}", dir.display()))?;
            info!("dataset {}:\n{report}", dir.display());
            ds.validate()?;
            Ok(ds)
        }
    }
}

fn synth(cmd: SynthCmd, file: &FileConfig) -> Result<()> {
    let classes = config::synth_class_count(
        cmd.classes.as_deref().or(file.classes.as_deref()).unwrap_or("six"),
    )?;
    let rate = cmd.rate.or(file.source_rate).unwrap_or(DatasetConfig::default().source_rate_hz);
    let spec = config::resolve_synth(&cmd.synth, file, classes, rate)?;
    let out = out_dir(cmd.out, file)?;
    let dataset = synthgen::generate(&spec)?;
    let csv = DatasetConfig {
        amplitude_count: spec.channels,
        ..DatasetConfig::default()
    };
    let written = export_dataset_csv(&dataset, &csv, &out)?;
    println!(
        "wrote {} recordings to {} (classes={} channels={} length={} rate_hz={} snr_db={} synth_seed={})",
        written.len(),
        out.display(),
        spec.classes,
        spec.channels,
        spec.length,
        rate,
        spec.snr_db,
        spec.seed
    );
    Ok(())
}

fn extract(cmd: ExtractCmd, file: &FileConfig) -> Result<()> {
    let ds = dataset(&cmd.data, file)?;
    let k = config::resolve_kernels(&cmd.kernels, file)?;
    let kernels = KernelSet::generate(k.seed, k.count, ds.min_length(), k.options)?;
    let out = out_dir(cmd.out, file)?;
    kernels.write_csv(BufWriter::new(File::create(out.join("kernels.csv"))?))?;
    let mut writer = FeatureCsvWriter::new(BufWriter::new(File::create(out.join("features.csv"))?), kernels.len())?;
    for s in &ds.samples {
        writer.write_sample(&s.source_id, &transform_sample(s, &kernels)?)?;
    }
    writer.finish()?.flush()?;
    println!(
        "wrote kernels.csv and features.csv to {} (samples={} subcarriers={} kernels={} kernel_seed={} l_input={})",
        out.display(),
        ds.samples.len(),
        ds.channels(),
        kernels.len(),
        kernels.seed(),
        kernels.l_input()
    );
    Ok(())
}

fn train(cmd: TrainCmd, file: &FileConfig) -> Result<()> {
    let ds = dataset(&cmd.data, file)?;
    let k = config::resolve_kernels(&cmd.kernels, file)?;
    let kernels = KernelSet::generate(k.seed, k.count, ds.min_length(), k.options)?;
    let bank = ClassifierBank::fit(&ds, kernels, &k.alphas)?;
    if let Some(parent) = cmd.model.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    bank.save(&cmd.model)?;
    println!(
        "saved {} (samples={} subcarriers={} classes={} kernels={} kernel_seed={})",
        cmd.model.display(),
        ds.samples.len(),
        bank.channels(),
        bank.class_names().join("|"),
        bank.kernels().len(),
        bank.kernels().seed()
    );
    Ok(())
}

/// Number of comma-separated fields on the first non-empty line.
fn column_count(path: &Path) -> Result<usize> {
    if !path.exists() {
        return Err(csihar_core::Error::MissingPath(path.to_path_buf()).into());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match text.lines().find(|l| !l.trim().is_empty()) {
        Some(line) => Ok(line.split(',').count()),
        None => bail!("{}: empty recording", path.display()),
    }
}

fn predict(cmd: PredictCmd, file: &FileConfig) -> Result<()> {
    let bank = ClassifierBank::load(&cmd.model)
        .with_context(|| format!("loading model {}", cmd.model.display()))?;
    let mask = config::resolve_mask(&cmd.mask, file, bank.channels())?;
    let d = DatasetConfig::default();
    for path in &cmd.inputs {
        let mut csv = DatasetConfig {
            source_rate_hz: cmd.source_rate.or(file.source_rate).unwrap_or(d.source_rate_hz),
            target_rate_hz: cmd.target_rate.or(file.target_rate).unwrap_or(d.target_rate_hz),
            ..d.clone()
        };
        // read every amplitude column; the bank reports a channel mismatch
        csv.amplitude_count = column_count(path)?
            .checked_sub(csv.amplitude_start)
            .filter(|&n| n > 0)
            .with_context(|| format!("{}: no amplitude columns", path.display()))?;
        let sample = preprocess(&read_recording(path, &csv)?, &csv)?;
        let record = bank
            .predict(&sample, mask.as_ref())
            .with_context(|| format!("predicting {}", path.display()))?;
        let counts: Vec<String> = bank
            .class_names()
            .iter()
            .zip(&record.counts)
            .map(|(name, n)| format!("{name}={n}"))
            .collect();
        println!(
            "{}\t{}\tvotes: {}",
            path.display(),
            bank.class_names()[record.winner.index()],
            counts.join(" ")
        );
    }
    Ok(())
}

/// Every non-empty subset of `antennas` antennas, smallest first.
fn antenna_subsets(antennas: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << antennas))
        .map(|bits| (0..antennas).filter(|a| bits & (1 << a) != 0).map(|a| a + 1).collect())
        .collect();
    subsets.sort_by_key(|s| (s.len(), s.clone()));
    subsets
}

fn evaluate(cmd: EvaluateCmd, file: &FileConfig) -> Result<()> {
    let ds = dataset(&cmd.data, file)?;
    let k = config::resolve_kernels(&cmd.kernels, file)?;
    let eval = config::resolve_eval(&cmd.cv, &cmd.mask, k, file, ds.channels())?;
    let out = out_dir(cmd.out, file)?;
    let outcome = cross_validate_dataset(&ds, &eval)?;
    let report = outcome.report(eval.mask.as_ref())?;
    report.write_all(&out)?;
    if cmd.sweep {
        let per = eval.subcarriers_per_antenna;
        let subsets = antenna_subsets(ds.channels().div_ceil(per));
        let masks = subsets
            .iter()
            .map(|s| ChannelMask::antennas(ds.channels(), per, s))
            .collect::<csihar_core::Result<Vec<_>>>()?;
        let names: Vec<String> = subsets
            .iter()
            .map(|s| {
                let ids: Vec<String> = s.iter().map(usize::to_string).collect();
                format!("antennas={}", ids.join("+"))
            })
            .collect();
        let results = mask_sweep(&outcome, &masks)?;
        fs::write(out.join("mask_sweep.csv"), mask_sweep_csv(&names, &results))?;
        for (name, r) in names.iter().zip(&results) {
            println!("{name:>22}  overall {:.4}  average {:.4}", r.overall_accuracy, r.average_accuracy);
        }
    }
    print!("{}", report.summary());
    println!("reports written to {}", out.display());
    Ok(())
}
