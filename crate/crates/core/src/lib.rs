//! Lightweight activity recognition from WiFi channel state information.
//!
//! The pipeline has three stages:
//!
//! 1. [`kernel_bank`] draws a fixed set of random dilated convolution kernels.
//! 2. [`transform`] convolves every subcarrier amplitude signal with every
//!    kernel and pools each output into a `(ppv, max)` pair, giving a
//!    fixed-length embedding per subcarrier.
//! 3. [`classifier`] fits one ridge classifier per subcarrier, and
//!    [`ensemble`] combines their predictions by plain vote counting.
//!
//! [`dataset_io`] and [`synthgen`] produce labelled [`SampleWindow`]s, and
//! [`evaluation`] runs stratified k-fold cross-validation over the whole
//! pipeline. [`bank`] persists a trained classifier bank for later
//! prediction.

pub mod bank;
pub mod classifier;
pub mod dataset_io;
pub mod ensemble;
mod error;
pub mod evaluation;
pub mod kernel_bank;
pub mod rng;
pub mod synthgen;
pub mod transform;

mod numfmt;

pub use bank::ClassifierBank;
pub use classifier::{default_alphas, fit_ridge, RidgeModel};
pub use dataset_io::{ClassSet, Dataset, DatasetConfig, SampleWindow};
pub use ensemble::{vote, ChannelMask, VoteRecord};
pub use error::{Error, Result};
pub use evaluation::{EvalConfig, EvalReport};
pub use kernel_bank::{generate_kernels, KernelSet, KernelSpec};
pub use synthgen::SynthSpec;
pub use transform::FeatureMatrix;

use std::fmt;

/// Zero-based class index.
///
/// Class `c` refers to `class_names[c]` of the owning [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub usize);

impl ClassId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
