//! CSI recordings: loading, preprocessing, caching and export.
//!
//! A dataset is a directory tree of CSV recordings, one file per recording
//! and one time step per row. By default column 0 holds a timestamp and
//! columns 1..=90 the subcarrier amplitudes, antenna-major (subcarriers 1-30
//! belong to antenna 1, 31-60 to antenna 2, 61-90 to antenna 3). Any further
//! columns (e.g. phase) are ignored. Only files whose name starts with the
//! configured prefix (`input_`) and ends in `.csv` are considered; the
//! activity is read from the underscore-separated tokens of the file name,
//! case-insensitively (`input_161219_siamak_walk_3.csv`).
//!
//! Preprocessing decimates to the target rate and normalizes every
//! subcarrier signal to zero mean and unit l2 norm.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::{numfmt, ClassId};

/// Signals whose centred l2 norm is at or below this map to all zeros.
pub const NORM_EPSILON: f64 = 1e-12;
pub const SUBCARRIERS_PER_ANTENNA: usize = 30;

const CACHE_MAGIC: &[u8; 4] = b"CSIW";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activity {
    LieDown,
    Fall,
    Walk,
    Run,
    SitDown,
    StandUp,
    PickUp,
}

impl Activity {
    /// Class order used for ids, reports and confusion matrices.
    pub const ALL: [Activity; 7] = [
        Activity::LieDown,
        Activity::Fall,
        Activity::Walk,
        Activity::Run,
        Activity::SitDown,
        Activity::StandUp,
        Activity::PickUp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activity::LieDown => "Lie down",
            Activity::Fall => "Fall",
            Activity::Walk => "Walk",
            Activity::Run => "Run",
            Activity::SitDown => "Sit down",
            Activity::StandUp => "Stand up",
            Activity::PickUp => "Pick up",
        }
    }

    /// Token written into exported file names.
    pub fn token(self) -> &'static str {
        match self {
            Activity::LieDown => "liedown",
            Activity::Fall => "fall",
            Activity::Walk => "walk",
            Activity::Run => "run",
            Activity::SitDown => "sitdown",
            Activity::StandUp => "standup",
            Activity::PickUp => "pickup",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Some(match token.to_ascii_lowercase().as_str() {
            "bed" | "liedown" | "lie" => Activity::LieDown,
            "fall" => Activity::Fall,
            "walk" => Activity::Walk,
            "run" => Activity::Run,
            "sitdown" | "sit" => Activity::SitDown,
            "standup" | "stand" => Activity::StandUp,
            "pickup" | "pick" => Activity::PickUp,
            _ => return None,
        })
    }

    pub fn id(self) -> ClassId {
        ClassId(Self::ALL.iter().position(|&a| a == self).unwrap())
    }
}

/// Finds the single activity named in a file name.
pub fn activity_from_file_name(name: &str) -> Result<Activity, String> {
    let stem = name.strip_suffix(".csv").unwrap_or(name);
    let mut found: Option<Activity> = None;
    for token in stem.split(['_', '-', ' ', '.']) {
        if let Some(a) = Activity::from_token(token) {
            match found {
                Some(prev) if prev != a => {
                    return Err(format!(
                        "file name names two activities ({} and {})",
                        prev.name(),
                        a.name()
                    ))
                }
                _ => found = Some(a),
            }
        }
    }
    found.ok_or_else(|| "no known activity token in file name".to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassSet {
    /// All activities except Pick up.
    Six,
    #[default]
    Seven,
}

impl ClassSet {
    pub fn activities(self) -> &'static [Activity] {
        match self {
            ClassSet::Six => &Activity::ALL[..6],
            ClassSet::Seven => &Activity::ALL,
        }
    }

    pub fn class_names(self) -> Vec<String> {
        self.activities().iter().map(|a| a.name().to_string()).collect()
    }

    pub fn contains(self, activity: Activity) -> bool {
        self.activities().contains(&activity)
    }
}

/// One labelled recording: `signals[m]` is subcarrier `m` over time.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    pub signals: Vec<Vec<f64>>,
    pub label: ClassId,
    pub sample_rate_hz: f64,
    pub source_id: String,
}

impl SampleWindow {
    pub fn channels(&self) -> usize {
        self.signals.len()
    }

    pub fn length(&self) -> usize {
        self.signals.first().map_or(0, Vec::len)
    }
}

/// Samples plus the names of their classes (`class_names[c]` for
/// `ClassId(c)`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<SampleWindow>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> Vec<ClassId> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn channels(&self) -> usize {
        self.samples.first().map_or(0, SampleWindow::channels)
    }

    /// Shortest recording, the length kernels should be drawn against.
    pub fn min_length(&self) -> usize {
        self.samples.iter().map(SampleWindow::length).min().unwrap_or(0)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for s in &self.samples {
            if let Some(c) = counts.get_mut(s.label.0) {
                *c += 1;
            }
        }
        counts
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.channels();
        for s in &self.samples {
            if s.label.0 >= self.class_count() {
                return Err(Error::invalid(format!(
                    "{}: label {} outside {} classes",
                    s.source_id,
                    s.label,
                    self.class_count()
                )));
            }
            if s.channels() != m {
                return Err(Error::ChannelMismatch {
                    expected: m,
                    actual: s.channels(),
                });
            }
            if s.signals.iter().any(|r| r.len() != s.length()) {
                return Err(Error::invalid(format!("{}: ragged signals", s.source_id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub class_set: ClassSet,
    pub source_rate_hz: f64,
    pub target_rate_hz: f64,
    /// First amplitude column (zero-based).
    pub amplitude_start: usize,
    pub amplitude_count: usize,
    pub has_timestamp_column: bool,
    pub file_prefix: String,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            class_set: ClassSet::Seven,
            source_rate_hz: 1000.0,
            target_rate_hz: 500.0,
            amplitude_start: 1,
            amplitude_count: 90,
            has_timestamp_column: true,
            file_prefix: "input_".to_string(),
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        decimation_factor(self.source_rate_hz, self.target_rate_hz)?;
        if self.amplitude_count == 0 {
            return Err(Error::invalid("amplitude column count must be positive"));
        }
        if self.has_timestamp_column && self.amplitude_start == 0 {
            return Err(Error::invalid(
                "amplitude columns overlap the timestamp column",
            ));
        }
        Ok(())
    }

    fn fingerprint(&self) -> String {
        format!("{self:?}")
    }
}

/// Integer ratio `source / target`.
pub fn decimation_factor(source_hz: f64, target_hz: f64) -> Result<usize> {
    if !(source_hz > 0.0 && target_hz > 0.0) {
        return Err(Error::invalid("sample rates must be positive"));
    }
    let ratio = source_hz / target_hz;
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio {
        return Err(Error::invalid(format!(
            "target rate {target_hz} Hz does not evenly divide source rate {source_hz} Hz"
        )));
    }
    Ok(factor as usize)
}

/// Keeps samples `0, factor, 2 * factor, ...`.
pub fn downsample(signal: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor < 1 {
        return Err(Error::invalid("decimation factor must be at least 1"));
    }
    Ok(signal.iter().step_by(factor).copied().collect())
}

/// `(x - mean) / ||x - mean||`, or all zeros for a (numerically) constant
/// signal.
pub fn normalize(signal: &[f64]) -> Vec<f64> {
    if signal.is_empty() {
        return Vec::new();
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let centred: Vec<f64> = signal.iter().map(|x| x - mean).collect();
    let norm = centred.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > NORM_EPSILON {
        centred.into_iter().map(|x| x / norm).collect()
    } else {
        vec![0.0; signal.len()]
    }
}

/// Decimates to `config.target_rate_hz` and normalizes every subcarrier.
pub fn preprocess(sample: &SampleWindow, config: &DatasetConfig) -> Result<SampleWindow> {
    let factor = decimation_factor(sample.sample_rate_hz, config.target_rate_hz)?;
    let signals = sample
        .signals
        .iter()
        .map(|s| Ok(normalize(&downsample(s, factor)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleWindow {
        signals,
        label: sample.label,
        sample_rate_hz: sample.sample_rate_hz / factor as f64,
        source_id: sample.source_id.clone(),
    })
}

pub fn preprocess_dataset(dataset: &Dataset, config: &DatasetConfig) -> Result<Dataset> {
    let samples = dataset
        .samples
        .par_iter()
        .map(|s| preprocess(s, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        samples,
        class_names: dataset.class_names.clone(),
    })
}

/// Summary of a directory load.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub files_considered: usize,
    pub files_loaded: usize,
    /// `(source id, reason)` for unreadable files.
    pub skipped: Vec<(String, String)>,
    /// Recordings of activities outside the class set.
    pub filtered: usize,
    pub cache_hits: usize,
    pub class_names: Vec<String>,
    pub per_class: Vec<usize>,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "files considered: {}", self.files_considered)?;
        writeln!(f, "files loaded:     {}", self.files_loaded)?;
        writeln!(f, "files skipped:    {}", self.skipped.len())?;
        for (id, why) in &self.skipped {
            writeln!(f, "  {id}: {why}")?;
        }
        writeln!(f, "outside class set: {}", self.filtered)?;
        if self.cache_hits > 0 {
            writeln!(f, "cache hits:       {}", self.cache_hits)?;
        }
        for (name, n) in self.class_names.iter().zip(&self.per_class) {
            writeln!(f, "  {name}: {n}")?;
        }
        Ok(())
    }
}

/// Loads and preprocesses every recording under `root`.
pub fn load_dataset(root: &Path, config: &DatasetConfig) -> Result<(Dataset, LoadReport)> {
    load(root, config, true, None)
}

/// Like [`load_dataset`], reusing preprocessed recordings from `cache_dir`
/// when both the file contents and the configuration are unchanged.
pub fn load_dataset_cached(
    root: &Path,
    config: &DatasetConfig,
    cache_dir: &Path,
) -> Result<(Dataset, LoadReport)> {
    load(root, config, true, Some(cache_dir))
}

/// Parses recordings without decimation or normalization.
pub fn load_raw_dataset(root: &Path, config: &DatasetConfig) -> Result<(Dataset, LoadReport)> {
    load(root, config, false, None)
}

enum FileOutcome {
    Loaded(SampleWindow, bool),
    Skipped(String, String),
    Filtered,
}

fn load(
    root: &Path,
    config: &DatasetConfig,
    preprocess_samples: bool,
    cache_dir: Option<&Path>,
) -> Result<(Dataset, LoadReport)> {
    config.validate()?;
    if !root.exists() {
        return Err(Error::MissingPath(root.to_path_buf()));
    }
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    for entry in WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| Error::Data {
            path: root.to_path_buf(),
            message: e.to_string(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        if !name.starts_with(&config.file_prefix) || !name.to_ascii_lowercase().ends_with(".csv") {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .unwrap_or(entry.path())
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        files.push((entry.path().to_path_buf(), rel));
    }
    files.sort_by(|a, b| a.1.cmp(&b.1));
    if let Some(dir) = cache_dir {
        fs::create_dir_all(dir)?;
    }

    let outcomes = files
        .par_iter()
        .map(|(path, id)| load_file(path, id, config, preprocess_samples, cache_dir))
        .collect::<Result<Vec<_>>>()?;

    let class_names = config.class_set.class_names();
    let mut report = LoadReport {
        files_considered: files.len(),
        class_names: class_names.clone(),
        per_class: vec![0; class_names.len()],
        ..LoadReport::default()
    };
    let mut samples = Vec::new();
    for outcome in outcomes {
        match outcome {
            FileOutcome::Loaded(s, hit) => {
                report.files_loaded += 1;
                report.cache_hits += hit as usize;
                report.per_class[s.label.0] += 1;
                samples.push(s);
            }
            FileOutcome::Skipped(id, why) => {
                log::warn!("skipping {id}: {why}");
                report.skipped.push((id, why));
            }
            FileOutcome::Filtered => report.filtered += 1,
        }
    }
    if samples.is_empty() {
        return Err(Error::NoSamples(root.to_path_buf()));
    }
    let dataset = Dataset {
        samples,
        class_names,
    };
    dataset.validate()?;
    Ok((dataset, report))
}

fn load_file(
    path: &Path,
    id: &str,
    config: &DatasetConfig,
    preprocess_samples: bool,
    cache_dir: Option<&Path>,
) -> Result<FileOutcome> {
    let file_name = path.file_name().unwrap_or_default().to_string_lossy();
    let activity = activity_from_file_name(&file_name).map_err(|message| Error::Data {
        path: path.to_path_buf(),
        message,
    })?;
    if !config.class_set.contains(activity) {
        return Ok(FileOutcome::Filtered);
    }
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) => return Ok(FileOutcome::Skipped(id.to_string(), e.to_string())),
    };

    let cache_path = cache_dir.map(|dir| {
        let mut h = Sha256::new();
        h.update(config.fingerprint().as_bytes());
        h.update([preprocess_samples as u8]);
        h.update(id.as_bytes());
        h.update([0]);
        h.update(&bytes);
        dir.join(format!("{}.bin", hex::encode(h.finalize())))
    });
    if let Some(cp) = &cache_path {
        if let Ok(cached) = fs::read(cp) {
            match decode_window(&cached) {
                Ok(w) => return Ok(FileOutcome::Loaded(w, true)),
                Err(e) => log::warn!("ignoring corrupt cache entry {}: {e}", cp.display()),
            }
        }
    }

    let text = match std::str::from_utf8(&bytes) {
        Ok(t) => t,
        Err(e) => return Ok(FileOutcome::Skipped(id.to_string(), e.to_string())),
    };
    let signals = parse_recording(text, path, config)?;
    if signals[0].is_empty() {
        return Ok(FileOutcome::Skipped(id.to_string(), "no data rows".into()));
    }
    let raw = SampleWindow {
        signals,
        label: activity.id(),
        sample_rate_hz: config.source_rate_hz,
        source_id: id.to_string(),
    };
    let window = if preprocess_samples {
        preprocess(&raw, config)?
    } else {
        raw
    };
    if let Some(cp) = &cache_path {
        if let Err(e) = fs::write(cp, encode_window(&window)) {
            log::warn!("could not write cache entry {}: {e}", cp.display());
        }
    }
    Ok(FileOutcome::Loaded(window, false))
}

/// Parses CSV text into `amplitude_count` signals.
pub fn parse_recording(text: &str, path: &Path, config: &DatasetConfig) -> Result<Vec<Vec<f64>>> {
    let m = config.amplitude_count;
    let start = config.amplitude_start;
    let mut signals: Vec<Vec<f64>> = vec![Vec::new(); m];
    for (r, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let mut taken = 0;
        for (c, cell) in cells.by_ref().enumerate().skip(start).take(m) {
            let v = numfmt::parse(cell).ok_or_else(|| Error::Data {
                path: path.to_path_buf(),
                message: format!("row {}, column {c}: cannot parse '{cell}'", r + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteInput {
                    path: path.to_path_buf(),
                    row: r + 1,
                    column: c,
                });
            }
            signals[c - start].push(v);
            taken += 1;
        }
        if taken != m {
            return Err(Error::Data {
                path: path.to_path_buf(),
                message: format!(
                    "row {} has {} columns, expected at least {}",
                    r + 1,
                    start + taken,
                    start + m
                ),
            });
        }
    }
    Ok(signals)
}

/// Reads one recording without a label, e.g. for prediction.
pub fn read_recording(path: &Path, config: &DatasetConfig) -> Result<SampleWindow> {
    config.validate()?;
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let signals = parse_recording(&text, path, config)?;
    if signals[0].is_empty() {
        return Err(Error::Data {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    Ok(SampleWindow {
        signals,
        label: ClassId(0),
        sample_rate_hz: config.source_rate_hz,
        source_id: path.display().to_string(),
    })
}

/// Writes one recording in the loader's CSV layout.
pub fn write_recording_csv<W: Write>(
    sample: &SampleWindow,
    config: &DatasetConfig,
    mut out: W,
) -> Result<()> {
    if sample.channels() != config.amplitude_count {
        return Err(Error::ChannelMismatch {
            expected: config.amplitude_count,
            actual: sample.channels(),
        });
    }
    let step_us = 1e6 / sample.sample_rate_hz;
    let mut line = String::new();
    for t in 0..sample.length() {
        line.clear();
        for c in 0..config.amplitude_start {
            if c > 0 {
                line.push(',');
            }
            if c == 0 && config.has_timestamp_column {
                line.push_str(&format!("{:.0}", t as f64 * step_us));
            } else {
                line.push('0');
            }
        }
        for (m, signal) in sample.signals.iter().enumerate() {
            if m > 0 || config.amplitude_start > 0 {
                line.push(',');
            }
            line.push_str(&numfmt::exact(signal[t]));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes every sample of an activity-labelled dataset under `dir`. Samples
/// whose source id is already a `.csv` path keep it; others are named
/// `<prefix><source id>_<activity>.csv`.
pub fn export_dataset_csv(dataset: &Dataset, config: &DatasetConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    dataset
        .samples
        .par_iter()
        .map(|s| {
            let activity = Activity::ALL.get(s.label.0).ok_or_else(|| {
                Error::invalid(format!(
                    "class {} has no activity name; CSV export supports at most 7 classes",
                    s.label
                ))
            })?;
            let rel = if s.source_id.ends_with(".csv") && !s.source_id.starts_with('/') {
                PathBuf::from(&s.source_id)
            } else {
                let id: String = s
                    .source_id
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '-' })
                    .collect();
                PathBuf::from(format!("{}{id}_{}.csv", config.file_prefix, activity.token()))
            };
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            write_recording_csv(s, config, BufWriter::new(fs::File::create(&path)?))?;
            Ok(path)
        })
        .collect()
}

pub fn encode_window(w: &SampleWindow) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + w.source_id.len() + 8 * w.channels() * w.length());
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&(w.label.0 as u32).to_le_bytes());
    out.extend_from_slice(&w.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(w.source_id.len() as u32).to_le_bytes());
    out.extend_from_slice(w.source_id.as_bytes());
    out.extend_from_slice(&(w.channels() as u32).to_le_bytes());
    out.extend_from_slice(&(w.length() as u32).to_le_bytes());
    for row in &w.signals {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_window(bytes: &[u8]) -> Result<SampleWindow> {
    const WHAT: &str = "sample cache entry";
    let mut r = ByteReader { bytes, pos: 0 };
    if r.take(4)? != CACHE_MAGIC {
        return Err(Error::format(WHAT, "bad magic"));
    }
    let version = r.u32()?;
    if version != CACHE_VERSION {
        return Err(Error::Version {
            what: WHAT,
            found: version,
            expected: CACHE_VERSION,
        });
    }
    let label = ClassId(r.u32()? as usize);
    let sample_rate_hz = r.f64()?;
    let id_len = r.u32()? as usize;
    let source_id = String::from_utf8(r.take(id_len)?.to_vec())
        .map_err(|_| Error::format(WHAT, "source id is not UTF-8"))?;
    let m = r.u32()? as usize;
    let l = r.u32()? as usize;
    let mut signals = Vec::with_capacity(m);
    for _ in 0..m {
        signals.push((0..l).map(|_| r.f64()).collect::<Result<Vec<_>>>()?);
    }
    if r.pos != bytes.len() {
        return Err(Error::format(WHAT, "trailing bytes"));
    }
    Ok(SampleWindow {
        signals,
        label,
        sample_rate_hz,
        source_id,
    })
}

pub(crate) struct ByteReader<'a> {
    pub(crate) bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("binary file", "unexpected end of data"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
