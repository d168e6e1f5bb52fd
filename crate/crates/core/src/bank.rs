//! A trained set of per-subcarrier classifiers, with binary persistence.
//!
//! The model file stores the kernel parameters `(seed, count, l_input,
//! options)` rather than the kernels themselves. Loading regenerates the
//! kernels and checks them against a stored SHA-256 fingerprint, so a change
//! in the generator is caught instead of producing silently wrong features.
//!
//! Layout (little endian): magic `CSIB`, `u32` version, `u64` seed,
//! `u64` count, `u64` l_input, `u8` centre flag, 32-byte fingerprint,
//! `u32` class count followed by length-prefixed UTF-8 names, `u32` model
//! count, then per model: `u32` feature length, `f64` alpha, and
//! means, scales, intercepts and coefficients as `f64` arrays.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::classifier::{fit_ridge_with_classes, RidgeModel};
use crate::dataset_io::{ByteReader, Dataset, SampleWindow};
use crate::ensemble::{vote, ChannelMask, VoteRecord};
use crate::error::{Error, Result};
use crate::kernel_bank::{KernelOptions, KernelSet};
use crate::transform::{transform_channel, transform_sample};
use crate::ClassId;

const MAGIC: &[u8; 4] = b"CSIB";
const VERSION: u32 = 1;
const WHAT: &str = "model file";

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierBank {
    kernels: KernelSet,
    class_names: Vec<String>,
    models: Vec<RidgeModel>,
}

impl ClassifierBank {
    /// Fits one classifier per subcarrier on every sample of `dataset`.
    pub fn fit(dataset: &Dataset, kernels: KernelSet, alphas: &[f64]) -> Result<Self> {
        dataset.validate()?;
        let counts = dataset.class_counts();
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!(
                "class '{}' has no samples to train on",
                dataset.class_names[c]
            )));
        }
        let labels = dataset.labels();
        let classes: Vec<ClassId> = (0..dataset.class_count()).map(ClassId).collect();
        // channels one at a time keeps only N x 2K features alive
        let models = (0..dataset.channels())
            .map(|m| {
                let rows = transform_channel(&dataset.samples, m, &kernels)?;
                let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
                fit_ridge_with_classes(&refs, &labels, &classes, alphas)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernels,
            class_names: dataset.class_names.clone(),
            models,
        })
    }

    pub fn kernels(&self) -> &KernelSet {
        &self.kernels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn models(&self) -> &[RidgeModel] {
        &self.models
    }

    pub fn channels(&self) -> usize {
        self.models.len()
    }

    /// Each subcarrier classifier's prediction for `sample`.
    pub fn predict_channels(&self, sample: &SampleWindow) -> Result<Vec<ClassId>> {
        if sample.channels() != self.channels() {
            return Err(Error::ChannelMismatch {
                expected: self.channels(),
                actual: sample.channels(),
            });
        }
        let features = transform_sample(sample, &self.kernels)?;
        self.models
            .par_iter()
            .enumerate()
            .map(|(m, model)| model.predict_class(features.row(m)))
            .collect()
    }

    pub fn predict(&self, sample: &SampleWindow, mask: Option<&ChannelMask>) -> Result<VoteRecord> {
        let per_subcarrier = self.predict_channels(sample)?;
        let full = ChannelMask::full(self.channels());
        vote(&per_subcarrier, self.class_names.len(), mask.unwrap_or(&full))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.kernels.seed().to_le_bytes());
        out.extend_from_slice(&(self.kernels.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.kernels.l_input() as u64).to_le_bytes());
        out.push(self.kernels.options().center_weights as u8);
        out.extend_from_slice(&fingerprint(&self.kernels));
        out.extend_from_slice(&(self.class_names.len() as u32).to_le_bytes());
        for name in &self.class_names {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
        }
        out.extend_from_slice(&(self.models.len() as u32).to_le_bytes());
        for model in &self.models {
            out.extend_from_slice(&(model.feature_len() as u32).to_le_bytes());
            out.extend_from_slice(&model.alpha.to_le_bytes());
            for v in model
                .feature_means
                .iter()
                .chain(&model.feature_scales)
                .chain(&model.intercepts)
                .chain(&model.coefficients)
            {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::format(WHAT, "bad magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Version {
                what: WHAT,
                found: version,
                expected: VERSION,
            });
        }
        let seed = r.u64()?;
        let count = r.u64()? as usize;
        let l_input = r.u64()? as usize;
        let center_weights = match r.take(1)?[0] {
            0 => false,
            1 => true,
            b => return Err(Error::format(WHAT, format!("bad centring flag {b}"))),
        };
        let stored: [u8; 32] = r.take(32)?.try_into().unwrap();
        let kernels = KernelSet::generate(seed, count, l_input, KernelOptions { center_weights })?;
        if fingerprint(&kernels) != stored {
            return Err(Error::format(
                WHAT,
                "regenerated kernels differ from the ones used in training",
            ));
        }
        let classes = r.u32()? as usize;
        let mut class_names = Vec::with_capacity(classes);
        for _ in 0..classes {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::format(WHAT, "class name is not UTF-8"))?;
            class_names.push(name);
        }
        let channels = r.u32()? as usize;
        let mut models = Vec::with_capacity(channels);
        for _ in 0..channels {
            let p = r.u32()? as usize;
            if p != 2 * count {
                return Err(Error::format(
                    WHAT,
                    format!("model expects {p} features, kernels give {}", 2 * count),
                ));
            }
            let alpha = r.f64()?;
            let mut read = |n: usize| (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>();
            let feature_means = read(p)?;
            let feature_scales = read(p)?;
            let intercepts = read(classes)?;
            let coefficients = read(classes * p)?;
            models.push(RidgeModel {
                class_labels: (0..classes).map(ClassId).collect(),
                coefficients,
                intercepts,
                feature_means,
                feature_scales,
                alpha,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::format(WHAT, "trailing bytes"));
        }
        Ok(Self {
            kernels,
            class_names,
            models,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingPath(path.to_path_buf()));
        }
        Self::from_bytes(&fs::read(path)?)
    }
}

fn fingerprint(kernels: &KernelSet) -> [u8; 32] {
    let mut h = Sha256::new();
    for k in kernels.kernels() {
        h.update((k.length() as u64).to_le_bytes());
        for w in &k.weights {
            h.update(w.to_le_bytes());
        }
        h.update(k.bias.to_le_bytes());
        h.update((k.dilation as u64).to_le_bytes());
        h.update((k.padding as u64).to_le_bytes());
    }
    h.finalize().into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::{preprocess_dataset, DatasetConfig};
    use crate::kernel_bank::generate_kernels;
    use crate::synthgen::{generate, SynthSpec};

    fn data() -> Dataset {
        let raw = generate(&SynthSpec::new(3, 4, 300, 6).with_seed(5)).unwrap();
        let config = DatasetConfig {
            source_rate_hz: 500.0,
            ..DatasetConfig::default()
        };
        preprocess_dataset(&raw, &config).unwrap()
    }

    #[test]
    fn fits_and_predicts_training_data() {
        let ds = data();
        let bank = ClassifierBank::fit(&ds, generate_kernels(1, 200, 300).unwrap(), &crate::default_alphas())
            .unwrap();
        assert_eq!(bank.channels(), 4);
        let correct = ds
            .samples
            .iter()
            .filter(|s| bank.predict(s, None).unwrap().winner == s.label)
            .count();
        assert_eq!(correct, ds.samples.len());
        let r = bank.predict(&ds.samples[0], None).unwrap();
        assert_eq!(r.counts.iter().sum::<usize>(), 4);
    }

    #[test]
    fn round_trip_bytes() {
        let ds = data();
        let bank = ClassifierBank::fit(&ds, generate_kernels(2, 50, 300).unwrap(), &[1.0]).unwrap();
        let back = ClassifierBank::from_bytes(&bank.to_bytes()).unwrap();
        assert_eq!(bank, back);
        for s in &ds.samples {
            assert_eq!(bank.predict(s, None).unwrap(), back.predict(s, None).unwrap());
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        bank.save(&path).unwrap();
        assert_eq!(ClassifierBank::load(&path).unwrap(), bank);
    }

    #[test]
    fn rejects_corruption() {
        let ds = data();
        let bank = ClassifierBank::fit(&ds, generate_kernels(2, 20, 300).unwrap(), &[1.0]).unwrap();
        let bytes = bank.to_bytes();

        let mut wrong_version = bytes.clone();
        wrong_version[4] = 9;
        assert!(matches!(
            ClassifierBank::from_bytes(&wrong_version),
            Err(Error::Version { found: 9, .. })
        ));

        let mut wrong_seed = bytes.clone();
        wrong_seed[8] ^= 1;
        assert!(ClassifierBank::from_bytes(&wrong_seed).is_err());

        assert!(ClassifierBank::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(ClassifierBank::from_bytes(&long).is_err());
        assert!(ClassifierBank::from_bytes(b"nope").is_err());
        assert!(matches!(
            ClassifierBank::load(Path::new("/nonexistent/model.bin")),
            Err(Error::MissingPath(_))
        ));
    }

    #[test]
    fn channel_mismatch() {
        let ds = data();
        let bank = ClassifierBank::fit(&ds, generate_kernels(2, 20, 300).unwrap(), &[1.0]).unwrap();
        let mut s = ds.samples[0].clone();
        s.signals.pop();
        assert!(matches!(
            bank.predict(&s, None),
            Err(Error::ChannelMismatch { expected: 4, actual: 3 })
        ));
    }
}
