//! Stratified k-fold cross-validation of the subcarrier classifier bank.
//!
//! The harness works channel by channel: a [`ChannelLearner`] prepares the
//! features of one subcarrier for every sample, then fits and predicts each
//! fold of each run. Per-subcarrier predictions are kept, so votes under
//! any [`ChannelMask`] can be recomputed without refitting. Metrics pool all
//! `(prediction, truth)` pairs across folds and runs.
//!
//! Timing sums, per channel, the feature extraction of the samples involved
//! plus the fit (training) or predict (inference) calls. Loading and parsing
//! are excluded.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::classifier::{default_alphas, fit_ridge_with_classes, RidgeModel};
use crate::dataset_io::{Dataset, SUBCARRIERS_PER_ANTENNA};
use crate::ensemble::{vote, ChannelMask};
use crate::error::{Error, Result};
use crate::kernel_bank::{KernelOptions, KernelSet, DEFAULT_KERNEL_COUNT};
use crate::transform::{transform_signal, with_subcarrier};
use crate::{rng, ClassId};

const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub folds: usize,
    pub runs: usize,
    pub run_seed: u64,
    pub kernel_seed: u64,
    pub kernel_count: usize,
    pub kernel_options: KernelOptions,
    pub alphas: Vec<f64>,
    /// Draw a fresh kernel set for every run (`kernel_seed + run`).
    pub vary_kernel_seed: bool,
    /// Channels that vote in the headline report; all when `None`.
    pub mask: Option<ChannelMask>,
    pub subcarriers_per_antenna: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            runs: 10,
            run_seed: 0,
            kernel_seed: 42,
            kernel_count: DEFAULT_KERNEL_COUNT,
            kernel_options: KernelOptions::default(),
            alphas: default_alphas(),
            vary_kernel_seed: false,
            mask: None,
            subcarriers_per_antenna: SUBCARRIERS_PER_ANTENNA,
        }
    }
}

/// Fits and applies one subcarrier's classifier.
pub trait ChannelLearner: Sync {
    type Prepared: Send + Sync;
    type Model: Send;

    fn channels(&self) -> usize;

    /// Runs returning the same key share prepared data.
    fn variant(&self, _run: usize) -> u64 {
        0
    }

    /// Per-channel data for every sample, plus the time spent on each sample.
    fn prepare(&self, channel: usize, variant: u64) -> Result<(Self::Prepared, Vec<Duration>)>;

    fn fit(
        &self,
        prepared: &Self::Prepared,
        train: &[usize],
        labels: &[ClassId],
        classes: &[ClassId],
    ) -> Result<Self::Model>;

    fn predict(&self, prepared: &Self::Prepared, model: &Self::Model, sample: usize)
        -> Result<ClassId>;
}

/// Random kernels + `(ppv, max)` features + ridge classifier.
pub struct RocketLearner<'a> {
    dataset: &'a Dataset,
    kernel_sets: Vec<KernelSet>,
    alphas: Vec<f64>,
    vary: bool,
}

impl<'a> RocketLearner<'a> {
    pub fn new(dataset: &'a Dataset, config: &EvalConfig) -> Result<Self> {
        let variants = if config.vary_kernel_seed { config.runs } else { 1 };
        let l_input = dataset.min_length();
        let kernel_sets = (0..variants)
            .map(|v| {
                KernelSet::generate(
                    config.kernel_seed.wrapping_add(v as u64),
                    config.kernel_count,
                    l_input,
                    config.kernel_options,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dataset,
            kernel_sets,
            alphas: config.alphas.clone(),
            vary: config.vary_kernel_seed,
        })
    }
}

impl ChannelLearner for RocketLearner<'_> {
    type Prepared = Vec<Vec<f64>>;
    type Model = RidgeModel;

    fn channels(&self) -> usize {
        self.dataset.channels()
    }

    fn variant(&self, run: usize) -> u64 {
        if self.vary {
            run as u64
        } else {
            0
        }
    }

    fn prepare(&self, channel: usize, variant: u64) -> Result<(Self::Prepared, Vec<Duration>)> {
        let kernels = &self.kernel_sets[variant as usize];
        let (rows, times): (Vec<_>, Vec<_>) = self
            .dataset
            .samples
            .par_iter()
            .map(|s| {
                let start = Instant::now();
                let row = transform_signal(&s.signals[channel], kernels)
                    .map_err(|e| with_subcarrier(e, channel));
                (row, start.elapsed())
            })
            .unzip();
        Ok((rows.into_iter().collect::<Result<Vec<_>>>()?, times))
    }

    fn fit(
        &self,
        prepared: &Self::Prepared,
        train: &[usize],
        labels: &[ClassId],
        classes: &[ClassId],
    ) -> Result<RidgeModel> {
        let rows: Vec<&[f64]> = train.iter().map(|&i| prepared[i].as_slice()).collect();
        let y: Vec<ClassId> = train.iter().map(|&i| labels[i]).collect();
        fit_ridge_with_classes(&rows, &y, classes, &self.alphas)
    }

    fn predict(&self, prepared: &Self::Prepared, model: &RidgeModel, sample: usize) -> Result<ClassId> {
        model.predict_class(&prepared[sample])
    }
}

/// Fold index of every sample. Each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped, so every fold holds
/// `floor(n_c / k)` or `ceil(n_c / k)` samples of class `c`.
pub fn stratified_folds(
    labels: &[ClassId],
    classes: usize,
    folds: usize,
    seed: u64,
    run: usize,
) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::invalid("need at least two folds"));
    }
    let mut rng = rng::substream(seed, run as u64);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].0 == c).collect();
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            assignment[i] = (offset + j) % folds;
        }
        offset = (offset + members.len()) % folds;
    }
    Ok(assignment)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timing {
    pub total_train_s: f64,
    pub total_infer_s: f64,
    pub infer_per_sample_s: f64,
}

/// Raw per-subcarrier predictions of a cross-validation.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub class_names: Vec<String>,
    pub labels: Vec<ClassId>,
    /// `predictions[run][sample][channel]`, each made by a model that did
    /// not see `sample`.
    pub predictions: Vec<Vec<Vec<ClassId>>>,
    pub timing: Timing,
    pub folds: usize,
    pub run_seed: u64,
    pub kernel_seed: u64,
    pub kernel_count: usize,
    pub subcarriers_per_antenna: usize,
}

pub fn cross_validate<L: ChannelLearner>(
    learner: &L,
    labels: &[ClassId],
    class_names: &[String],
    config: &EvalConfig,
) -> Result<CvOutcome> {
    let classes = class_names.len();
    if config.folds < 2 {
        return Err(Error::invalid("need at least two folds"));
    }
    if config.runs == 0 {
        return Err(Error::invalid("need at least one run"));
    }
    if let Some(l) = labels.iter().find(|l| l.0 >= classes) {
        return Err(Error::invalid(format!("label {l} outside {classes} classes")));
    }
    let mut counts = vec![0; classes];
    labels.iter().for_each(|l| counts[l.0] += 1);
    if let Some(c) = (0..classes).find(|&c| counts[c] < config.folds) {
        return Err(Error::TooFewSamples {
            class: class_names[c].clone(),
            count: counts[c],
            folds: config.folds,
        });
    }
    let class_ids: Vec<ClassId> = (0..classes).map(ClassId).collect();
    let channels = learner.channels();
    if let Some(mask) = &config.mask {
        if mask.len() != channels {
            return Err(Error::ChannelMismatch {
                expected: channels,
                actual: mask.len(),
            });
        }
    }
    let n = labels.len();

    let plans: Vec<Vec<(Vec<usize>, Vec<usize>)>> = (0..config.runs)
        .map(|run| {
            let assignment = stratified_folds(labels, classes, config.folds, config.run_seed, run)?;
            Ok((0..config.folds)
                .map(|f| (0..n).partition(|&i| assignment[i] != f))
                .collect())
        })
        .collect::<Result<_>>()?;

    struct ChannelResult {
        predictions: Vec<Vec<ClassId>>,
        train: Duration,
        infer: Duration,
    }

    let per_channel = (0..channels)
        .into_par_iter()
        .map(|m| {
            let mut predictions = vec![vec![ClassId(0); n]; config.runs];
            let mut train = Duration::ZERO;
            let mut infer = Duration::ZERO;
            let mut cached: Option<(u64, L::Prepared, Vec<Duration>)> = None;
            for (run, plan) in plans.iter().enumerate() {
                let variant = learner.variant(run);
                if cached.as_ref().map(|c| c.0) != Some(variant) {
                    let (prep, times) = learner.prepare(m, variant)?;
                    cached = Some((variant, prep, times));
                }
                let (_, prep, extract) = cached.as_ref().unwrap();
                for (train_idx, test_idx) in plan {
                    let start = Instant::now();
                    let model = learner.fit(prep, train_idx, labels, &class_ids)?;
                    train += start.elapsed() + train_idx.iter().map(|&i| extract[i]).sum::<Duration>();
                    let start = Instant::now();
                    for &i in test_idx {
                        predictions[run][i] = learner.predict(prep, &model, i)?;
                    }
                    infer += start.elapsed() + test_idx.iter().map(|&i| extract[i]).sum::<Duration>();
                }
            }
            Ok(ChannelResult {
                predictions,
                train,
                infer,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut predictions = vec![vec![Vec::with_capacity(channels); n]; config.runs];
    let mut train = Duration::ZERO;
    let mut infer = Duration::ZERO;
    for ch in &per_channel {
        train += ch.train;
        infer += ch.infer;
        for (run, preds) in ch.predictions.iter().enumerate() {
            for (i, p) in preds.iter().enumerate() {
                predictions[run][i].push(*p);
            }
        }
    }
    let evaluated = (config.runs * n).max(1) as f64;
    Ok(CvOutcome {
        class_names: class_names.to_vec(),
        labels: labels.to_vec(),
        predictions,
        timing: Timing {
            total_train_s: train.as_secs_f64(),
            total_infer_s: infer.as_secs_f64(),
            infer_per_sample_s: infer.as_secs_f64() / evaluated,
        },
        folds: config.folds,
        run_seed: config.run_seed,
        kernel_seed: config.kernel_seed,
        kernel_count: config.kernel_count,
        subcarriers_per_antenna: config.subcarriers_per_antenna,
    })
}

/// Row = actual class, column = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn add(&mut self, actual: ClassId, predicted: ClassId) {
        self.counts[actual.0][predicted.0] += 1;
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes()).map(|c| self.counts[c][c]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct(), self.total())
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn per_class_accuracy(&self) -> Vec<f64> {
        (0..self.classes())
            .map(|c| ratio(self.counts[c][c], self.support(c)))
            .collect()
    }

    /// Rows scaled to sum to one; empty rows stay zero.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter().map(|&v| ratio(v, total)).collect()
            })
            .collect()
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub class_names: Vec<String>,
    pub per_class_accuracy: Vec<f64>,
    /// Unweighted mean of `per_class_accuracy`.
    pub average_accuracy: f64,
    /// Fraction of all pooled predictions that were correct.
    pub overall_accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub per_subcarrier_accuracy: Vec<f64>,
    pub timing: Timing,
    pub fold_count: usize,
    pub runs: usize,
    pub run_seed: u64,
    pub kernel_seed: u64,
    pub kernel_count: usize,
    pub channels_included: usize,
    pub subcarriers_per_antenna: usize,
}

impl CvOutcome {
    pub fn channels(&self) -> usize {
        self.predictions
            .first()
            .and_then(|r| r.first())
            .map_or(0, Vec::len)
    }

    pub fn runs(&self) -> usize {
        self.predictions.len()
    }

    /// Pooled confusion matrix of the vote under `mask`.
    pub fn confusion(&self, mask: &ChannelMask) -> Result<ConfusionMatrix> {
        let classes = self.class_names.len();
        let mut cm = ConfusionMatrix::new(classes);
        for run in &self.predictions {
            for (per_channel, &truth) in run.iter().zip(&self.labels) {
                cm.add(truth, vote(per_channel, classes, mask)?.winner);
            }
        }
        Ok(cm)
    }

    /// Accuracy of each subcarrier's own classifier, pooled over runs.
    pub fn per_subcarrier_accuracy(&self) -> Vec<f64> {
        let m = self.channels();
        let mut correct = vec![0u64; m];
        let mut total = 0u64;
        for run in &self.predictions {
            for (per_channel, truth) in run.iter().zip(&self.labels) {
                total += 1;
                for (c, p) in per_channel.iter().enumerate() {
                    correct[c] += (p == truth) as u64;
                }
            }
        }
        correct.into_iter().map(|c| ratio(c, total)).collect()
    }

    pub fn report(&self, mask: Option<&ChannelMask>) -> Result<EvalReport> {
        let full = ChannelMask::full(self.channels());
        let mask = mask.unwrap_or(&full);
        let confusion = self.confusion(mask)?;
        let per_class_accuracy = confusion.per_class_accuracy();
        let average_accuracy =
            per_class_accuracy.iter().sum::<f64>() / per_class_accuracy.len().max(1) as f64;
        Ok(EvalReport {
            class_names: self.class_names.clone(),
            overall_accuracy: confusion.accuracy(),
            per_class_accuracy,
            average_accuracy,
            confusion,
            per_subcarrier_accuracy: self.per_subcarrier_accuracy(),
            timing: self.timing,
            fold_count: self.folds,
            runs: self.runs(),
            run_seed: self.run_seed,
            kernel_seed: self.kernel_seed,
            kernel_count: self.kernel_count,
            channels_included: mask.count_included(),
            subcarriers_per_antenna: self.subcarriers_per_antenna,
        })
    }
}

/// Vote accuracy under one mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskResult {
    pub channels_included: usize,
    pub overall_accuracy: f64,
    pub average_accuracy: f64,
}

/// Re-votes the cached predictions under every mask; no refitting.
pub fn mask_sweep(outcome: &CvOutcome, masks: &[ChannelMask]) -> Result<Vec<MaskResult>> {
    masks
        .iter()
        .map(|mask| {
            if mask.count_included() == 0 {
                return Err(Error::invalid("empty channel mask"));
            }
            let cm = outcome.confusion(mask)?;
            let per_class = cm.per_class_accuracy();
            Ok(MaskResult {
                channels_included: mask.count_included(),
                overall_accuracy: cm.accuracy(),
                average_accuracy: per_class.iter().sum::<f64>() / per_class.len().max(1) as f64,
            })
        })
        .collect()
}

/// Cross-validates the full pipeline on a preprocessed dataset.
pub fn cross_validate_dataset(dataset: &Dataset, config: &EvalConfig) -> Result<CvOutcome> {
    dataset.validate()?;
    let learner = RocketLearner::new(dataset, config)?;
    cross_validate(&learner, &dataset.labels(), &dataset.class_names, config)
}

pub fn run_cv(dataset: &Dataset, config: &EvalConfig) -> Result<EvalReport> {
    cross_validate_dataset(dataset, config)?.report(config.mask.as_ref())
}

/// Accuracy of every subcarrier's classifier on its own, from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierReport {
    pub accuracies: Vec<f64>,
    pub subcarriers_per_antenna: usize,
    /// Vote over all subcarriers, same run.
    pub voted_accuracy: f64,
}

impl SubcarrierReport {
    /// `(antenna, subcarrier within antenna, accuracy)`, all 1-based.
    pub fn rows(&self) -> Vec<(usize, usize, f64)> {
        let per = self.subcarriers_per_antenna.max(1);
        self.accuracies
            .iter()
            .enumerate()
            .map(|(m, &a)| (m / per + 1, m % per + 1, a))
            .collect()
    }

    pub fn antenna_means(&self) -> Vec<f64> {
        let per = self.subcarriers_per_antenna.max(1);
        self.accuracies
            .chunks(per)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }
}

pub fn per_subcarrier_report(dataset: &Dataset, config: &EvalConfig) -> Result<SubcarrierReport> {
    let single = EvalConfig {
        runs: 1,
        ..config.clone()
    };
    let outcome = cross_validate_dataset(dataset, &single)?;
    Ok(SubcarrierReport {
        accuracies: outcome.per_subcarrier_accuracy(),
        subcarriers_per_antenna: config.subcarriers_per_antenna,
        voted_accuracy: outcome.confusion(&ChannelMask::full(outcome.channels()))?.accuracy(),
    })
}

impl EvalReport {
    fn header(&self, kind: &str) -> String {
        format!(
            "# csihar-{kind} v{REPORT_VERSION} kernel_seed={} run_seed={} kernels={} folds={} runs={} channels_included={}/{}",
            self.kernel_seed,
            self.run_seed,
            self.kernel_count,
            self.fold_count,
            self.runs,
            self.channels_included,
            self.per_subcarrier_accuracy.len()
        )
    }

    /// `report.csv`: accuracy and support per class, then the unweighted
    /// average and the pooled overall accuracy.
    pub fn report_csv(&self) -> String {
        let mut s = self.header("report");
        s.push('\n');
        s.push_str("class,accuracy,support,correct\n");
        for (c, name) in self.class_names.iter().enumerate() {
            let _ = writeln!(
                s,
                "{name},{:.6},{},{}",
                self.per_class_accuracy[c],
                self.confusion.support(c),
                self.confusion.counts[c][c]
            );
        }
        let _ = writeln!(s, "average,{:.6},,", self.average_accuracy);
        let _ = writeln!(
            s,
            "overall,{:.6},{},{}",
            self.overall_accuracy,
            self.confusion.total(),
            self.confusion.correct()
        );
        s
    }

    /// `confusion.csv`: the raw count matrix followed by the row-normalized
    /// one, rows = actual, columns = predicted.
    pub fn confusion_csv(&self) -> String {
        let mut s = self.header("confusion");
        s.push('\n');
        s.push_str("matrix,actual");
        for name in &self.class_names {
            let _ = write!(s, ",{name}");
        }
        s.push('\n');
        for (c, row) in self.confusion.counts.iter().enumerate() {
            let _ = write!(s, "raw,{}", self.class_names[c]);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        for (c, row) in self.confusion.normalized().iter().enumerate() {
            let _ = write!(s, "normalized,{}", self.class_names[c]);
            for v in row {
                let _ = write!(s, ",{v:.4}");
            }
            s.push('\n');
        }
        s
    }

    /// `subcarrier_accuracy.csv`: `antenna,subcarrier,accuracy`, 1-based,
    /// subcarrier numbered within its antenna.
    pub fn subcarrier_csv(&self) -> String {
        let mut s = self.header("subcarrier-accuracy");
        s.push('\n');
        s.push_str("antenna,subcarrier,accuracy\n");
        let per = self.subcarriers_per_antenna.max(1);
        for (m, a) in self.per_subcarrier_accuracy.iter().enumerate() {
            let _ = writeln!(s, "{},{},{a:.6}", m / per + 1, m % per + 1);
        }
        s
    }

    /// `timing.csv`. Wall-clock measurements vary between executions, so
    /// they are kept apart from the reproducible reports.
    pub fn timing_csv(&self) -> String {
        let mut s = self.header("timing");
        s.push('\n');
        s.push_str("measure,seconds\n");
        let _ = writeln!(s, "total_train,{:.6}", self.timing.total_train_s);
        let _ = writeln!(s, "total_infer,{:.6}", self.timing.total_infer_s);
        let _ = writeln!(s, "infer_per_sample,{:.6e}", self.timing.infer_per_sample_s);
        s
    }

    /// Writes `report.csv`, `confusion.csv`, `subcarrier_accuracy.csv` and
    /// `timing.csv` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.csv"), self.report_csv())?;
        fs::write(dir.join("confusion.csv"), self.confusion_csv())?;
        fs::write(dir.join("subcarrier_accuracy.csv"), self.subcarrier_csv())?;
        fs::write(dir.join("timing.csv"), self.timing_csv())?;
        Ok(())
    }

    /// One-line-per-class table in the layout of a results table: class
    /// accuracies, their average, then timing.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "kernel_seed={} run_seed={} kernels={} folds={} runs={} channels={}/{}",
            self.kernel_seed,
            self.run_seed,
            self.kernel_count,
            self.fold_count,
            self.runs,
            self.channels_included,
            self.per_subcarrier_accuracy.len()
        );
        for (name, acc) in self.class_names.iter().zip(&self.per_class_accuracy) {
            let _ = writeln!(s, "{name:>10}  {acc:.2}");
        }
        let _ = writeln!(s, "{:>10}  {:.2}", "Avg.", self.average_accuracy);
        let _ = writeln!(s, "{:>10}  {:.4}", "overall", self.overall_accuracy);
        let _ = writeln!(s, "total training time (s):   {:.2}", self.timing.total_train_s);
        let _ = writeln!(s, "total inference time (s):  {:.2}", self.timing.total_infer_s);
        let _ = writeln!(s, "inference per sample (s):  {:.2e}", self.timing.infer_per_sample_s);
        s
    }
}

/// `mask_sweep.csv`.
pub fn mask_sweep_csv(names: &[String], results: &[MaskResult]) -> String {
    let mut s = format!("# csihar-mask-sweep v{REPORT_VERSION}\n");
    s.push_str("mask,channels_included,overall_accuracy,average_accuracy\n");
    for (name, r) in names.iter().zip(results) {
        let _ = writeln!(
            s,
            "{name},{},{:.6},{:.6}",
            r.channels_included, r.overall_accuracy, r.average_accuracy
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Predicts the truth on every channel.
    struct Oracle {
        labels: Vec<ClassId>,
        channels: usize,
    }

    impl ChannelLearner for Oracle {
        type Prepared = ();
        type Model = ();

        fn channels(&self) -> usize {
            self.channels
        }

        fn prepare(&self, _: usize, _: u64) -> Result<((), Vec<Duration>)> {
            Ok(((), vec![Duration::ZERO; self.labels.len()]))
        }

        fn fit(&self, _: &(), train: &[usize], labels: &[ClassId], _: &[ClassId]) -> Result<()> {
            assert!(train.iter().all(|&i| labels[i] == self.labels[i]));
            Ok(())
        }

        fn predict(&self, _: &(), _: &(), sample: usize) -> Result<ClassId> {
            Ok(self.labels[sample])
        }
    }

    /// Channel `c` is right only on samples whose index is divisible by
    /// `c + 1`, otherwise says class 0.
    struct Patchy {
        labels: Vec<ClassId>,
        channel: std::sync::atomic::AtomicUsize,
    }

    impl ChannelLearner for Patchy {
        type Prepared = usize;
        type Model = ();

        fn channels(&self) -> usize {
            3
        }

        fn prepare(&self, channel: usize, _: u64) -> Result<(usize, Vec<Duration>)> {
            self.channel.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            Ok((channel, vec![Duration::ZERO; self.labels.len()]))
        }

        fn fit(&self, _: &usize, _: &[usize], _: &[ClassId], _: &[ClassId]) -> Result<()> {
            Ok(())
        }

        fn predict(&self, channel: &usize, _: &(), sample: usize) -> Result<ClassId> {
            Ok(if sample % (channel + 1) == 0 {
                self.labels[sample]
            } else {
                ClassId(0)
            })
        }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|c| format!("c{c}")).collect()
    }

    fn labels(per_class: &[usize]) -> Vec<ClassId> {
        per_class
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(ClassId(c), n))
            .collect()
    }

    #[test]
    fn oracle_gives_identity() {
        let labels = labels(&[12, 10, 15]);
        let oracle = Oracle {
            labels: labels.clone(),
            channels: 4,
        };
        let cfg = EvalConfig {
            runs: 2,
            ..EvalConfig::default()
        };
        let out = cross_validate(&oracle, &labels, &names(3), &cfg).unwrap();
        let report = out.report(None).unwrap();
        assert_eq!(report.per_class_accuracy, vec![1.0; 3]);
        assert_eq!(report.average_accuracy, 1.0);
        assert_eq!(report.per_subcarrier_accuracy, vec![1.0; 4]);
        let norm = report.confusion.normalized();
        for (i, row) in norm.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(report.confusion.total(), 2 * 37);
    }

    #[test]
    fn stratification_balance() {
        let labels = labels(&[23, 11, 40, 10]);
        for run in 0..5 {
            let a = stratified_folds(&labels, 4, 10, 3, run).unwrap();
            for c in 0..4 {
                let n_c = labels.iter().filter(|l| l.0 == c).count();
                for f in 0..10 {
                    let in_fold = (0..labels.len())
                        .filter(|&i| a[i] == f && labels[i].0 == c)
                        .count();
                    assert!(in_fold == n_c / 10 || in_fold == n_c.div_ceil(10));
                }
            }
            let sizes: Vec<usize> = (0..10).map(|f| a.iter().filter(|&&x| x == f).count()).collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        let a = stratified_folds(&labels, 4, 10, 3, 0).unwrap();
        let b = stratified_folds(&labels, 4, 10, 3, 1).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn too_few_samples_names_class() {
        let labels = labels(&[12, 9]);
        let oracle = Oracle {
            labels: labels.clone(),
            channels: 1,
        };
        let err = cross_validate(&oracle, &labels, &names(2), &EvalConfig::default()).unwrap_err();
        match err {
            Error::TooFewSamples { class, count, folds } => {
                assert_eq!((class.as_str(), count, folds), ("c1", 9, 10));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn prepares_each_channel_once_without_kernel_variation() {
        let labels = labels(&[10, 10]);
        let learner = Patchy {
            labels: labels.clone(),
            channel: Default::default(),
        };
        let cfg = EvalConfig {
            runs: 3,
            ..EvalConfig::default()
        };
        let out = cross_validate(&learner, &labels, &names(2), &cfg).unwrap();
        assert_eq!(learner.channel.load(std::sync::atomic::Ordering::Relaxed), 3);
        assert_eq!(out.runs(), 3);
    }

    #[test]
    fn confusion_counts_and_masks() {
        let labels = labels(&[10, 10]);
        let learner = Patchy {
            labels: labels.clone(),
            channel: Default::default(),
        };
        let cfg = EvalConfig {
            runs: 1,
            ..EvalConfig::default()
        };
        let out = cross_validate(&learner, &labels, &names(2), &cfg).unwrap();
        let solo = out.per_subcarrier_accuracy();
        // channel 0 always right, channel 1 right on evens or class 0
        assert_eq!(solo[0], 1.0);
        assert_eq!(solo[1], 15.0 / 20.0);

        let masks = vec![
            ChannelMask::full(3),
            ChannelMask::full(3),
            ChannelMask::single(3, 1).unwrap(),
            ChannelMask::single(3, 2).unwrap(),
        ];
        let sweep = mask_sweep(&out, &masks).unwrap();
        assert_eq!(sweep[0], sweep[1]);
        assert_eq!(sweep[2].overall_accuracy, solo[1]);
        assert_eq!(sweep[3].overall_accuracy, solo[2]);

        let report = out.report(None).unwrap();
        let cm = &report.confusion;
        assert_eq!(cm.total(), 20);
        assert_eq!(cm.correct() as f64 / cm.total() as f64, report.overall_accuracy);
        for row in cm.normalized() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 0.005);
        }
    }

    #[test]
    fn reports_are_stable_text() {
        let labels = labels(&[10, 10]);
        let oracle = Oracle {
            labels: labels.clone(),
            channels: 2,
        };
        let cfg = EvalConfig {
            runs: 1,
            kernel_count: 5,
            ..EvalConfig::default()
        };
        let report = cross_validate(&oracle, &labels, &names(2), &cfg)
            .unwrap()
            .report(None)
            .unwrap();
        let csv = report.report_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "# csihar-report v1 kernel_seed=42 run_seed=0 kernels=5 folds=10 runs=1 channels_included=2/2"
        );
        assert_eq!(lines.next().unwrap(), "class,accuracy,support,correct");
        assert_eq!(lines.next().unwrap(), "c0,1.000000,10,10");
        assert!(csv.contains("average,1.000000,,"));
        let conf = report.confusion_csv();
        assert!(conf.contains("raw,c1,0,10"));
        assert!(conf.contains("normalized,c0,1.0000,0.0000"));
        assert!(report.subcarrier_csv().contains("antenna,subcarrier,accuracy\n1,1,1.000000\n1,2,1.000000"));
        let dir = tempfile::tempdir().unwrap();
        report.write_all(dir.path()).unwrap();
        for f in ["report.csv", "confusion.csv", "subcarrier_accuracy.csv", "timing.csv"] {
            assert!(dir.path().join(f).exists());
        }
    }

    #[test]
    fn subcarrier_rows_group_by_antenna() {
        let r = SubcarrierReport {
            accuracies: (0..90).map(|m| m as f64 / 90.0).collect(),
            subcarriers_per_antenna: 30,
            voted_accuracy: 1.0,
        };
        let rows = r.rows();
        assert_eq!(rows[0].0, 1);
        assert_eq!(rows[30], (2, 1, 30.0 / 90.0));
        assert_eq!(rows[89].0, 3);
        assert_eq!(rows[89].1, 30);
        assert_eq!(r.antenna_means().len(), 3);
    }

    #[test]
    fn rejects_bad_configs() {
        let labels = labels(&[10, 10]);
        let oracle = Oracle {
            labels: labels.clone(),
            channels: 2,
        };
        let one_fold = EvalConfig {
            folds: 1,
            ..EvalConfig::default()
        };
        assert!(cross_validate(&oracle, &labels, &names(2), &one_fold).is_err());
        let bad_mask = EvalConfig {
            mask: Some(ChannelMask::full(3)),
            ..EvalConfig::default()
        };
        assert!(cross_validate(&oracle, &labels, &names(2), &bad_mask).is_err());
    }
}
