//! Flag definitions and their resolution against an optional config file.
//!
//! The config file is TOML with one `key = value` pair per flag, keys spelled
//! like the long flag without dashes in front, for example
//!
//! ```toml
//! kernels = 1000
//! kernel-seed = 7
//! alphas = [0.1, 1.0, 10.0]
//! mask-antennas = [1, 2]
//! ```
//!
//! A flag given on the command line wins over the file, which wins over the
//! built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use csihar_core::dataset_io::SUBCARRIERS_PER_ANTENNA;
use csihar_core::kernel_bank::{KernelOptions, DEFAULT_KERNEL_COUNT};
use csihar_core::{default_alphas, ChannelMask, ClassSet, DatasetConfig, EvalConfig, SynthSpec};

pub const DEFAULT_KERNEL_SEED: u64 = 42;
pub const DEFAULT_RUN_SEED: u64 = 0;
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_RUNS: usize = 10;
pub const DEFAULT_SYNTH_CHANNELS: usize = 90;
pub const DEFAULT_SYNTH_LENGTH: usize = 1000;
pub const DEFAULT_SYNTH_PER_CLASS: usize = 20;
pub const DEFAULT_SNR_DB: f64 = 20.0;

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub synth: Option<bool>,
    pub classes: Option<String>,
    pub source_rate: Option<f64>,
    pub target_rate: Option<f64>,
    pub subcarriers: Option<usize>,
    pub file_prefix: Option<String>,
    pub cache: Option<PathBuf>,
    pub channels: Option<usize>,
    pub length: Option<usize>,
    pub samples_per_class: Option<usize>,
    pub snr: Option<f64>,
    pub synth_seed: Option<u64>,
    pub informative: Option<Vec<usize>>,
    pub kernels: Option<usize>,
    pub kernel_seed: Option<u64>,
    pub no_center: Option<bool>,
    pub folds: Option<usize>,
    pub runs: Option<usize>,
    pub run_seed: Option<u64>,
    pub alphas: Option<Vec<f64>>,
    pub vary_kernel_seed: Option<bool>,
    pub mask_antennas: Option<Vec<usize>>,
    pub subcarriers_per_antenna: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }
}

fn comma_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("'{p}': {e}")))
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    comma_list(s)
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    comma_list(s)
}

/// Where samples come from and how they are preprocessed.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset directory of `input_*.csv` recordings
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Use an in-memory synthetic dataset instead of --data
    #[arg(long)]
    pub synth: bool,
    /// Class set: six | seven for recorded data, or a count >= 2 with --synth [default: six]
    #[arg(long)]
    pub classes: Option<String>,
    /// Sampling rate of the recordings in Hz [default: 1000]
    #[arg(long, value_name = "HZ")]
    pub source_rate: Option<f64>,
    /// Rate after decimation in Hz [default: 500]
    #[arg(long, value_name = "HZ")]
    pub target_rate: Option<f64>,
    /// Amplitude columns per recording [default: 90]
    #[arg(long)]
    pub subcarriers: Option<usize>,
    /// Only files starting with this prefix are loaded [default: input_]
    #[arg(long)]
    pub file_prefix: Option<String>,
    /// Directory caching preprocessed recordings
    #[arg(long, value_name = "DIR")]
    pub cache: Option<PathBuf>,
    #[command(flatten)]
    pub synth_args: SynthArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic subcarriers [default: 90]
    #[arg(long)]
    pub channels: Option<usize>,
    /// Synthetic samples per recording [default: 1000]
    #[arg(long)]
    pub length: Option<usize>,
    /// Synthetic recordings per class [default: 20]
    #[arg(long)]
    pub samples_per_class: Option<usize>,
    /// Synthetic signal-to-noise ratio in dB [default: 20]
    #[arg(long, value_name = "DB", allow_hyphen_values = true)]
    pub snr: Option<f64>,
    /// Seed of the synthetic generator [default: 0]
    #[arg(long)]
    pub synth_seed: Option<u64>,
    /// Comma-separated 1-based subcarriers carrying the class signal [default: all]
    #[arg(long, value_parser = parse_usize_list, value_name = "LIST")]
    pub informative: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Number of random kernels [default: 10000]
    #[arg(long)]
    pub kernels: Option<usize>,
    /// Kernel generator seed [default: 42]
    #[arg(long)]
    pub kernel_seed: Option<u64>,
    /// Keep raw kernel weights instead of subtracting their mean
    #[arg(long)]
    pub no_center: bool,
    /// Comma-separated ridge penalties [default: 10^linspace(-3,3,10)]
    #[arg(long, value_parser = parse_f64_list, value_name = "LIST")]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    /// Cross-validation folds [default: 10]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Independent reshuffled runs [default: 10]
    #[arg(long)]
    pub runs: Option<usize>,
    /// Seed of the fold shuffles [default: 0]
    #[arg(long)]
    pub run_seed: Option<u64>,
    /// Draw a new kernel set per run (seed = kernel seed + run)
    #[arg(long)]
    pub vary_kernel_seed: bool,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Comma-separated 1-based antennas whose subcarriers vote [default: all]
    #[arg(long, value_parser = parse_usize_list, value_name = "LIST")]
    pub mask_antennas: Option<Vec<usize>>,
    /// Consecutive subcarriers per antenna [default: 30]
    #[arg(long)]
    pub subcarriers_per_antenna: Option<usize>,
}

pub enum Source {
    Dir(PathBuf),
    Synth(SynthSpec),
}

pub struct DataSettings {
    pub source: Source,
    pub dataset: DatasetConfig,
    pub cache: Option<PathBuf>,
}

pub fn resolve_data(args: &DataArgs, file: &FileConfig) -> Result<DataSettings> {
    let synth = args.synth || file.synth.unwrap_or(false);
    let classes = args
        .classes
        .clone()
        .or_else(|| file.classes.clone())
        .unwrap_or_else(|| "six".into());
    let mut dataset = resolve_dataset_config(args, file)?;
    let source = if synth {
        let count = synth_class_count(&classes)?;
        let spec = resolve_synth(&args.synth_args, file, count, dataset.target_rate_hz)?;
        // generated directly at the target rate
        dataset.source_rate_hz = dataset.target_rate_hz;
        Source::Synth(spec)
    } else {
        dataset.class_set = class_set(&classes)?;
        match args.data.clone().or_else(|| file.data.clone()) {
            Some(dir) => Source::Dir(dir),
            None => bail!("no dataset given; pass --data DIR or --synth"),
        }
    };
    Ok(DataSettings {
        source,
        dataset,
        cache: args.cache.clone().or_else(|| file.cache.clone()),
    })
}

pub fn resolve_dataset_config(args: &DataArgs, file: &FileConfig) -> Result<DatasetConfig> {
    let d = DatasetConfig::default();
    let config = DatasetConfig {
        source_rate_hz: args.source_rate.or(file.source_rate).unwrap_or(d.source_rate_hz),
        target_rate_hz: args.target_rate.or(file.target_rate).unwrap_or(d.target_rate_hz),
        amplitude_count: args.subcarriers.or(file.subcarriers).unwrap_or(d.amplitude_count),
        file_prefix: args
            .file_prefix
            .clone()
            .or_else(|| file.file_prefix.clone())
            .unwrap_or(d.file_prefix.clone()),
        ..d
    };
    config.validate()?;
    Ok(config)
}

pub fn class_set(name: &str) -> Result<ClassSet> {
    match name.to_ascii_lowercase().as_str() {
        "six" | "6" => Ok(ClassSet::Six),
        "seven" | "7" => Ok(ClassSet::Seven),
        other => bail!("unknown class set '{other}' (expected six or seven)"),
    }
}

pub fn synth_class_count(name: &str) -> Result<usize> {
    match name.to_ascii_lowercase().as_str() {
        "six" => Ok(6),
        "seven" => Ok(7),
        n => n
            .parse()
            .with_context(|| format!("--classes must be six, seven or a number, got '{n}'")),
    }
}

pub fn resolve_synth(
    args: &SynthArgs,
    file: &FileConfig,
    classes: usize,
    sample_rate_hz: f64,
) -> Result<SynthSpec> {
    let channels = args.channels.or(file.channels).unwrap_or(DEFAULT_SYNTH_CHANNELS);
    let mut spec = SynthSpec::new(
        classes,
        channels,
        args.length.or(file.length).unwrap_or(DEFAULT_SYNTH_LENGTH),
        args.samples_per_class
            .or(file.samples_per_class)
            .unwrap_or(DEFAULT_SYNTH_PER_CLASS),
    )
    .with_snr(args.snr.or(file.snr).unwrap_or(DEFAULT_SNR_DB))
    .with_seed(args.synth_seed.or(file.synth_seed).unwrap_or(0));
    spec.sample_rate_hz = sample_rate_hz;
    if let Some(list) = args.informative.clone().or_else(|| file.informative.clone()) {
        if list.contains(&0) {
            bail!("--informative takes 1-based subcarrier numbers");
        }
        spec = spec.with_informative(list.iter().map(|m| m - 1).collect());
    }
    spec.validate()?;
    Ok(spec)
}

pub struct KernelSettings {
    pub count: usize,
    pub seed: u64,
    pub options: KernelOptions,
    pub alphas: Vec<f64>,
}

pub fn resolve_kernels(args: &KernelArgs, file: &FileConfig) -> Result<KernelSettings> {
    let alphas = args
        .alphas
        .clone()
        .or_else(|| file.alphas.clone())
        .unwrap_or_else(default_alphas);
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        bail!("alphas must be a non-empty list of positive numbers");
    }
    Ok(KernelSettings {
        count: args.kernels.or(file.kernels).unwrap_or(DEFAULT_KERNEL_COUNT),
        seed: args.kernel_seed.or(file.kernel_seed).unwrap_or(DEFAULT_KERNEL_SEED),
        options: KernelOptions {
            center_weights: !(args.no_center || file.no_center.unwrap_or(false)),
        },
        alphas,
    })
}

pub fn per_antenna(args: &MaskArgs, file: &FileConfig) -> usize {
    args.subcarriers_per_antenna
        .or(file.subcarriers_per_antenna)
        .unwrap_or(SUBCARRIERS_PER_ANTENNA)
}

pub fn resolve_mask(args: &MaskArgs, file: &FileConfig, channels: usize) -> Result<Option<ChannelMask>> {
    let per = per_antenna(args, file);
    match args.mask_antennas.clone().or_else(|| file.mask_antennas.clone()) {
        Some(keep) => Ok(Some(ChannelMask::antennas(channels, per, &keep)?)),
        None => Ok(None),
    }
}

pub fn resolve_eval(
    cv: &CvArgs,
    mask: &MaskArgs,
    kernels: KernelSettings,
    file: &FileConfig,
    channels: usize,
) -> Result<EvalConfig> {
    Ok(EvalConfig {
        folds: cv.folds.or(file.folds).unwrap_or(DEFAULT_FOLDS),
        runs: cv.runs.or(file.runs).unwrap_or(DEFAULT_RUNS),
        run_seed: cv.run_seed.or(file.run_seed).unwrap_or(DEFAULT_RUN_SEED),
        kernel_seed: kernels.seed,
        kernel_count: kernels.count,
        kernel_options: kernels.options,
        alphas: kernels.alphas,
        vary_kernel_seed: cv.vary_kernel_seed || file.vary_kernel_seed.unwrap_or(false),
        mask: resolve_mask(mask, file, channels)?,
        subcarriers_per_antenna: per_antenna(mask, file),
    })
}
