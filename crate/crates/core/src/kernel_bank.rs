//! Random convolution kernel generation.
//!
//! Each kernel is drawn independently:
//!
//! * length uniform over {7, 9, 11},
//! * weights i.i.d. `N(0, 1)`, then mean-centred (configurable),
//! * bias `U(-1, 1)`,
//! * dilation `floor(2^a)` with `a ~ U(0, log2((l_input - 1) / (length - 1)))`,
//! * zero padding of `((length - 1) * dilation) / 2` on both ends with
//!   probability 1/2, none otherwise.
//!
//! Stride is always one and is not stored. Kernel `i` draws from
//! [`rng::substream(seed, i)`](crate::rng::substream), so a set is a pure
//! function of `(seed, count, l_input, options)`.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::{numfmt, rng};

pub const KERNEL_LENGTHS: [usize; 3] = [7, 9, 11];
pub const MAX_KERNEL_LENGTH: usize = 11;

/// Default number of kernels.
pub const DEFAULT_KERNEL_COUNT: usize = 10_000;

const CSV_MAGIC: &str = "# csihar-kernels";
const CSV_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub dilation: usize,
    pub padding: usize,
}

impl KernelSpec {
    pub fn length(&self) -> usize {
        self.weights.len()
    }

    /// Span of input samples covered by one output position.
    pub fn receptive_field(&self) -> usize {
        (self.length() - 1) * self.dilation + 1
    }

    /// Number of outputs for a signal of `signal_len` samples, or `None` if
    /// the padded signal is shorter than the receptive field.
    pub fn output_len(&self, signal_len: usize) -> Option<usize> {
        (signal_len + 2 * self.padding + 1).checked_sub(self.receptive_field())
            .filter(|&n| n > 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelOptions {
    /// Subtract each kernel's mean weight after sampling.
    pub center_weights: bool,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            center_weights: true,
        }
    }
}

/// An immutable, ordered set of kernels together with the parameters that
/// regenerate it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSet {
    kernels: Vec<KernelSpec>,
    seed: u64,
    l_input: usize,
    options: KernelOptions,
}

/// Generates `count` kernels with the default options.
pub fn generate_kernels(seed: u64, count: usize, l_input: usize) -> Result<KernelSet> {
    KernelSet::generate(seed, count, l_input, KernelOptions::default())
}

impl KernelSet {
    pub fn generate(
        seed: u64,
        count: usize,
        l_input: usize,
        options: KernelOptions,
    ) -> Result<Self> {
        if l_input <= MAX_KERNEL_LENGTH {
            return Err(Error::invalid(format!(
                "input length {l_input} must exceed the longest kernel ({MAX_KERNEL_LENGTH})"
            )));
        }
        let kernels = (0..count)
            .into_par_iter()
            .map(|index| sample_kernel(seed, index as u64, l_input, options))
            .collect();
        Ok(Self {
            kernels,
            seed,
            l_input,
            options,
        })
    }

    pub fn kernels(&self) -> &[KernelSpec] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn l_input(&self) -> usize {
        self.l_input
    }

    pub fn options(&self) -> KernelOptions {
        self.options
    }

    /// Writes `kernels.csv`: a version line, then one row per kernel with
    /// columns `index,length,bias,dilation,padding,w0..w10`. Weight cells past
    /// the kernel length are empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{CSV_MAGIC} v{CSV_VERSION} seed={} l_input={} center_weights={}",
            self.seed, self.l_input, self.options.center_weights
        )?;
        write!(out, "index,length,bias,dilation,padding")?;
        for j in 0..MAX_KERNEL_LENGTH {
            write!(out, ",w{j}")?;
        }
        writeln!(out)?;
        for (i, k) in self.kernels.iter().enumerate() {
            write!(
                out,
                "{i},{},{},{},{}",
                k.length(),
                numfmt::exact(k.bias),
                k.dilation,
                k.padding
            )?;
            for j in 0..MAX_KERNEL_LENGTH {
                match k.weights.get(j) {
                    Some(w) => write!(out, ",{}", numfmt::exact(*w))?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        const WHAT: &str = "kernel file";
        let mut lines = input.lines();
        let version_line = lines
            .next()
            .ok_or_else(|| Error::format(WHAT, "empty file"))??;
        let meta = version_line
            .strip_prefix(CSV_MAGIC)
            .ok_or_else(|| Error::format(WHAT, "missing version line"))?;
        let mut parts = meta.split_whitespace();
        let version: u32 = parts
            .next()
            .and_then(|v| v.strip_prefix('v'))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::format(WHAT, "bad version tag"))?;
        if version != CSV_VERSION {
            return Err(Error::Version {
                what: WHAT,
                found: version,
                expected: CSV_VERSION,
            });
        }
        let (mut seed, mut l_input, mut center) = (None, None, None);
        for kv in parts {
            match kv.split_once('=') {
                Some(("seed", v)) => seed = v.parse::<u64>().ok(),
                Some(("l_input", v)) => l_input = v.parse::<usize>().ok(),
                Some(("center_weights", v)) => center = v.parse::<bool>().ok(),
                _ => return Err(Error::format(WHAT, format!("unknown field '{kv}'"))),
            }
        }
        let (Some(seed), Some(l_input), Some(center_weights)) = (seed, l_input, center) else {
            return Err(Error::format(WHAT, "incomplete version line"));
        };

        let _header = lines
            .next()
            .ok_or_else(|| Error::format(WHAT, "missing header"))??;
        let mut kernels = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::format(WHAT, format!("row {}: {msg}", row + 1));
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 5 + MAX_KERNEL_LENGTH {
                return Err(bad("wrong number of columns"));
            }
            let index: usize = cells[0].parse().map_err(|_| bad("bad index"))?;
            if index != kernels.len() {
                return Err(bad("kernel indices out of order"));
            }
            let length: usize = cells[1].parse().map_err(|_| bad("bad length"))?;
            if !KERNEL_LENGTHS.contains(&length) {
                return Err(bad("length must be 7, 9 or 11"));
            }
            let bias = numfmt::parse(cells[2]).ok_or_else(|| bad("bad bias"))?;
            let dilation: usize = cells[3].parse().map_err(|_| bad("bad dilation"))?;
            let padding: usize = cells[4].parse().map_err(|_| bad("bad padding"))?;
            let weights = cells[5..5 + length]
                .iter()
                .map(|c| numfmt::parse(c))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| bad("bad weight"))?;
            if cells[5 + length..].iter().any(|c| !c.is_empty()) {
                return Err(bad("weights beyond kernel length"));
            }
            if dilation == 0 {
                return Err(bad("dilation must be at least 1"));
            }
            kernels.push(KernelSpec {
                weights,
                bias,
                dilation,
                padding,
            });
        }
        Ok(Self {
            kernels,
            seed,
            l_input,
            options: KernelOptions { center_weights },
        })
    }
}

fn sample_kernel(seed: u64, index: u64, l_input: usize, options: KernelOptions) -> KernelSpec {
    let mut rng = rng::substream(seed, index);

    let length = KERNEL_LENGTHS[rng.random_range(0..KERNEL_LENGTHS.len())];

    let mut weights: Vec<f64> = (0..length)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    if options.center_weights {
        let mean = weights.iter().sum::<f64>() / length as f64;
        weights.iter_mut().for_each(|w| *w -= mean);
    }

    let bias = rng.random_range(-1.0..1.0);

    let max_dilation = (l_input - 1) / (length - 1);
    let upper = ((l_input - 1) as f64 / (length - 1) as f64).log2();
    let exponent = rng.random_range(0.0..upper);
    let dilation = (exponent.exp2().floor() as usize).clamp(1, max_dilation);

    let padding = if rng.random_bool(0.5) {
        ((length - 1) * dilation) / 2
    } else {
        0
    };

    KernelSpec {
        weights,
        bias,
        dilation,
        padding,
    }
}
