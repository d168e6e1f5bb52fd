//! Dilated convolution and `(ppv, max)` pooling.
//!
//! For kernel `k` and a signal `x` zero-padded by `k.padding` on both ends,
//!
//! ```text
//! out[i] = bias + sum_{j=0}^{length-1} w[j] * x_pad[i + j * dilation]
//! ```
//!
//! for every `i` where the whole window fits (stride one). Taps are summed in
//! ascending order, starting from the bias, so the result is reproducible to
//! the bit. Each output sequence is reduced to the proportion of positive
//! values and its maximum.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::dataset_io::SampleWindow;
use crate::error::{Error, Result};
use crate::kernel_bank::{KernelSet, KernelSpec};
use crate::numfmt;

/// Outputs computed per block; small enough to stay in L1.
const BLOCK: usize = 512;
/// Kernels handed to one rayon task.
const KERNEL_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pooled {
    pub ppv: f64,
    pub max: f64,
}

/// Full convolution output. Prefer [`apply_kernel`] when only the pooled
/// features are needed.
pub fn convolve(signal: &[f64], kernel: &KernelSpec) -> Result<Vec<f64>> {
    let out_len = checked_output_len(signal.len(), kernel)?;
    let mut out = vec![kernel.bias; out_len];
    accumulate_taps(signal, kernel, 0, &mut out);
    Ok(out)
}

pub fn pool(conv: &[f64]) -> Result<Pooled> {
    if conv.is_empty() {
        return Err(Error::invalid("cannot pool an empty convolution output"));
    }
    let mut acc = PoolAcc::new();
    acc.push(conv);
    Ok(acc.finish(conv.len()))
}

/// Convolves and pools in one pass without materializing the output.
pub fn apply_kernel(signal: &[f64], kernel: &KernelSpec) -> Result<Pooled> {
    let out_len = checked_output_len(signal.len(), kernel)?;
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2.
        return Ok(unsafe { apply_kernel_avx2(signal, kernel, out_len) });
    }
    Ok(apply_kernel_any(signal, kernel, out_len))
}

// Wider registers only; without FMA the arithmetic is unchanged.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn apply_kernel_avx2(signal: &[f64], kernel: &KernelSpec, out_len: usize) -> Pooled {
    apply_kernel_any(signal, kernel, out_len)
}

#[inline(always)]
fn apply_kernel_any(signal: &[f64], kernel: &KernelSpec, out_len: usize) -> Pooled {
    let mut block = [0.0f64; BLOCK];
    let mut acc = PoolAcc::new();
    let mut start = 0;
    while start < out_len {
        let n = BLOCK.min(out_len - start);
        let buf = &mut block[..n];
        if !interior_block(signal, kernel, start, buf) {
            buf.fill(kernel.bias);
            accumulate_taps(signal, kernel, start, buf);
        }
        acc.push(buf);
        start += n;
    }
    acc.finish(out_len)
}

fn checked_output_len(len: usize, kernel: &KernelSpec) -> Result<usize> {
    kernel.output_len(len).ok_or(Error::SignalTooShort {
        len,
        padding: kernel.padding,
        field: kernel.receptive_field(),
    })
}

/// Adds every tap's contribution to `out`, which holds outputs
/// `first..first + out.len()` and must be pre-filled with the bias.
/// Taps that land on padding contribute exactly zero and are skipped.
#[inline(always)]
fn accumulate_taps(signal: &[f64], kernel: &KernelSpec, first: usize, out: &mut [f64]) {
    let len = signal.len() as isize;
    let first = first as isize;
    let n = out.len() as isize;
    for (j, &w) in kernel.weights.iter().enumerate() {
        // input index of output `first + i` for this tap
        let shift = first + (j * kernel.dilation) as isize - kernel.padding as isize;
        let lo = (-shift).clamp(0, n);
        let hi = (len - shift).clamp(lo, n);
        if lo == hi {
            continue;
        }
        let xs = &signal[(lo + shift) as usize..(hi + shift) as usize];
        for (o, &x) in out[lo as usize..hi as usize].iter_mut().zip(xs) {
            *o += w * x;
        }
    }
}

/// Computes outputs `first..first + out.len()` when none of their taps
/// touch padding. Returns `false`, leaving `out` untouched, otherwise.
#[inline(always)]
fn interior_block(signal: &[f64], kernel: &KernelSpec, first: usize, out: &mut [f64]) -> bool {
    let Some(start) = first.checked_sub(kernel.padding) else {
        return false;
    };
    if start + out.len() + (kernel.length() - 1) * kernel.dilation > signal.len() {
        return false;
    }
    let x = &signal[start..];
    match kernel.length() {
        7 => interior::<7>(x, kernel, out),
        9 => interior::<9>(x, kernel, out),
        11 => interior::<11>(x, kernel, out),
        _ => return false,
    }
    true
}

const LANES: usize = 16;

#[inline(always)]
fn interior<const K: usize>(x: &[f64], kernel: &KernelSpec, out: &mut [f64]) {
    let n = out.len();
    let d = kernel.dilation;
    let w: &[f64; K] = kernel.weights.as_slice().try_into().unwrap();
    let taps: [&[f64]; K] = std::array::from_fn(|j| &x[j * d..j * d + n]);
    let mut i = 0;
    while i + LANES <= n {
        let mut acc = [kernel.bias; LANES];
        for j in 0..K {
            let xs: &[f64; LANES] = taps[j][i..i + LANES].try_into().unwrap();
            for l in 0..LANES {
                acc[l] += w[j] * xs[l];
            }
        }
        out[i..i + LANES].copy_from_slice(&acc);
        i += LANES;
    }
    for (o, i) in out[i..].iter_mut().zip(i..) {
        let mut acc = kernel.bias;
        for j in 0..K {
            acc += w[j] * taps[j][i];
        }
        *o = acc;
    }
}

struct PoolAcc {
    positive: usize,
    max: f64,
}

impl PoolAcc {
    fn new() -> Self {
        Self {
            positive: 0,
            max: f64::NEG_INFINITY,
        }
    }

    #[inline(always)]
    fn push(&mut self, values: &[f64]) {
        let mut positive = 0usize;
        let mut max = self.max;
        for &v in values {
            positive += (v > 0.0) as usize;
            max = if v > max { v } else { max };
        }
        self.positive += positive;
        self.max = max;
    }

    fn finish(self, total: usize) -> Pooled {
        Pooled {
            ppv: self.positive as f64 / total as f64,
            max: self.max,
        }
    }
}

/// Per-subcarrier embeddings of one sample: `rows` subcarriers by `2 * kernels`
/// columns, laid out as `ppv_0, max_0, ppv_1, max_1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    rows: usize,
    kernels: usize,
}

impl FeatureMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, kernels: usize) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != 2 * kernels) {
            return Err(Error::LengthMismatch {
                expected: 2 * kernels,
                actual: bad.len(),
            });
        }
        Ok(Self {
            values: rows.into_iter().flatten().collect(),
            rows: n,
            kernels,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn kernels(&self) -> usize {
        self.kernels
    }

    pub fn width(&self) -> usize {
        2 * self.kernels
    }

    pub fn row(&self, subcarrier: usize) -> &[f64] {
        let w = self.width();
        &self.values[subcarrier * w..(subcarrier + 1) * w]
    }

    pub fn ppv(&self, subcarrier: usize, kernel: usize) -> f64 {
        self.row(subcarrier)[2 * kernel]
    }

    pub fn max(&self, subcarrier: usize, kernel: usize) -> f64 {
        self.row(subcarrier)[2 * kernel + 1]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |m| self.row(m))
    }
}

/// Embeds one signal: `2 * kernels.len()` features.
pub fn transform_signal(signal: &[f64], kernels: &KernelSet) -> Result<Vec<f64>> {
    let mut out = vec![0.0; 2 * kernels.len()];
    out.par_chunks_mut(2 * KERNEL_CHUNK)
        .zip(kernels.kernels().par_chunks(KERNEL_CHUNK))
        .enumerate()
        .try_for_each(|(chunk, (dst, ks))| {
            for (i, k) in ks.iter().enumerate() {
                let p = apply_kernel(signal, k).map_err(|e| (chunk * KERNEL_CHUNK + i, e))?;
                dst[2 * i] = p.ppv;
                dst[2 * i + 1] = p.max;
            }
            Ok::<_, (usize, Error)>(())
        })
        .map_err(|(kernel, e)| Error::Transform {
            subcarrier: 0,
            kernel,
            source: Box::new(e),
        })?;
    Ok(out)
}

pub fn transform_sample(sample: &SampleWindow, kernels: &KernelSet) -> Result<FeatureMatrix> {
    let rows = sample
        .signals
        .par_iter()
        .enumerate()
        .map(|(m, signal)| {
            transform_signal(signal, kernels).map_err(|e| with_subcarrier(e, m))
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::from_rows(rows, kernels.len())
}

/// Embeds subcarrier `channel` of every sample, one row per sample.
pub fn transform_channel(
    samples: &[SampleWindow],
    channel: usize,
    kernels: &KernelSet,
) -> Result<Vec<Vec<f64>>> {
    samples
        .par_iter()
        .map(|s| {
            let signal = s.signals.get(channel).ok_or(Error::ChannelMismatch {
                expected: channel + 1,
                actual: s.channels(),
            })?;
            transform_signal(signal, kernels).map_err(|e| with_subcarrier(e, channel))
        })
        .collect()
}

pub(crate) fn with_subcarrier(e: Error, subcarrier: usize) -> Error {
    match e {
        Error::Transform { kernel, source, .. } => Error::Transform {
            subcarrier,
            kernel,
            source,
        },
        other => other,
    }
}

/// Streams `features.csv`: header `sample_id,subcarrier,ppv_0,max_0,...`, one
/// row per (sample, subcarrier), values with 17 significant digits.
pub struct FeatureCsvWriter<W: Write> {
    out: W,
    kernels: usize,
}

impl<W: Write> FeatureCsvWriter<W> {
    pub fn new(mut out: W, kernels: usize) -> Result<Self> {
        write!(out, "sample_id,subcarrier")?;
        for d in 0..kernels {
            write!(out, ",ppv_{d},max_{d}")?;
        }
        writeln!(out)?;
        Ok(Self { out, kernels })
    }

    pub fn write_sample(&mut self, sample_id: &str, features: &FeatureMatrix) -> Result<()> {
        if sample_id.contains([',', '"', '\n', '\r']) {
            return Err(Error::invalid(format!(
                "sample id '{sample_id}' cannot be written to CSV unquoted"
            )));
        }
        if features.kernels() != self.kernels {
            return Err(Error::LengthMismatch {
                expected: 2 * self.kernels,
                actual: features.width(),
            });
        }
        let mut line = String::with_capacity(features.width() * 24);
        for (m, row) in features.iter_rows().enumerate() {
            line.clear();
            line.push_str(sample_id);
            line.push(',');
            line.push_str(&m.to_string());
            for &v in row {
                line.push(',');
                line.push_str(&numfmt::exact(v));
            }
            writeln!(self.out, "{line}")?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// One row of `features.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub sample_id: String,
    pub subcarrier: usize,
    pub values: Vec<f64>,
}

pub fn read_features_csv<R: BufRead>(input: R) -> Result<Vec<FeatureRow>> {
    const WHAT: &str = "feature file";
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(WHAT, "empty file"))??;
    let columns = header.split(',').count();
    if columns < 2 || (columns - 2) % 2 != 0 || !header.starts_with("sample_id,subcarrier") {
        return Err(Error::format(WHAT, "bad header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::format(WHAT, format!("row {}: {msg}", i + 1));
        let mut cells = line.split(',');
        let sample_id = cells.next().ok_or_else(|| bad("missing id"))?.to_string();
        let subcarrier = cells
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| bad("bad subcarrier"))?;
        let values = cells
            .map(numfmt::parse)
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad("bad value"))?;
        if values.len() != columns - 2 {
            return Err(bad("wrong number of columns"));
        }
        rows.push(FeatureRow {
            sample_id,
            subcarrier,
            values,
        });
    }
    Ok(rows)
}
