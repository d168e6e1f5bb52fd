//! Vote counting across the per-subcarrier classifier bank.

use crate::error::{Error, Result};
use crate::ClassId;

/// Subcarriers that take part in the vote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelMask {
    included: Vec<bool>,
}

impl ChannelMask {
    pub fn new(included: Vec<bool>) -> Result<Self> {
        if !included.iter().any(|&b| b) {
            return Err(Error::invalid("channel mask excludes every subcarrier"));
        }
        Ok(Self { included })
    }

    pub fn full(channels: usize) -> Self {
        Self {
            included: vec![true; channels],
        }
    }

    pub fn single(channels: usize, channel: usize) -> Result<Self> {
        if channel >= channels {
            return Err(Error::invalid(format!(
                "channel {channel} out of range for {channels} channels"
            )));
        }
        let mut included = vec![false; channels];
        included[channel] = true;
        Ok(Self { included })
    }

    /// Keeps the listed antennas (1-based), each owning
    /// `per_antenna` consecutive subcarriers.
    pub fn antennas(channels: usize, per_antenna: usize, keep: &[usize]) -> Result<Self> {
        if per_antenna == 0 {
            return Err(Error::invalid("subcarriers per antenna must be positive"));
        }
        let count = channels.div_ceil(per_antenna);
        if let Some(a) = keep.iter().find(|&&a| a == 0 || a > count) {
            return Err(Error::invalid(format!(
                "antenna {a} out of range 1..={count}"
            )));
        }
        Self::new(
            (0..channels)
                .map(|m| keep.contains(&(m / per_antenna + 1)))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.included.len()
    }

    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }

    pub fn included(&self) -> &[bool] {
        &self.included
    }

    pub fn count_included(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }

    pub fn is_included(&self, channel: usize) -> bool {
        self.included.get(channel).copied().unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteRecord {
    pub per_subcarrier: Vec<ClassId>,
    pub counts: Vec<usize>,
    pub winner: ClassId,
}

/// Counts the included predictions per class and returns the most frequent
/// class, preferring the lowest class index on ties.
pub fn vote(per_subcarrier: &[ClassId], classes: usize, mask: &ChannelMask) -> Result<VoteRecord> {
    if mask.len() != per_subcarrier.len() {
        return Err(Error::ChannelMismatch {
            expected: mask.len(),
            actual: per_subcarrier.len(),
        });
    }
    if mask.count_included() == 0 {
        return Err(Error::invalid("channel mask excludes every subcarrier"));
    }
    let mut counts = vec![0usize; classes];
    for (m, class) in per_subcarrier.iter().enumerate() {
        let slot = counts.get_mut(class.0).ok_or_else(|| {
            Error::invalid(format!(
                "subcarrier {m} predicted class {class}, outside 0..{classes}"
            ))
        })?;
        if mask.is_included(m) {
            *slot += 1;
        }
    }
    let mut winner = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[winner] {
            winner = c;
        }
    }
    Ok(VoteRecord {
        per_subcarrier: per_subcarrier.to_vec(),
        counts,
        winner: ClassId(winner),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(v: &[usize]) -> Vec<ClassId> {
        v.iter().map(|&c| ClassId(c)).collect()
    }

    #[test]
    fn majority() {
        let r = vote(&ids(&[0, 0, 1]), 2, &ChannelMask::full(3)).unwrap();
        assert_eq!(r.counts, vec![2, 1]);
        assert_eq!(r.winner, ClassId(0));
    }

    #[test]
    fn tie_prefers_lowest_index() {
        let r = vote(&ids(&[1, 0]), 2, &ChannelMask::full(2)).unwrap();
        assert_eq!(r.winner, ClassId(0));
        let r = vote(&ids(&[2, 1, 1, 2]), 3, &ChannelMask::full(4)).unwrap();
        assert_eq!(r.winner, ClassId(1));
    }

    #[test]
    fn unanimous() {
        let r = vote(&vec![ClassId(4); 90], 7, &ChannelMask::full(90)).unwrap();
        assert_eq!(r.counts[4], 90);
        assert_eq!(r.winner, ClassId(4));
    }

    #[test]
    fn masked_recount() {
        // classes 3,3,1,1,2 in one-based terms; drop both 3s
        let preds = ids(&[2, 2, 0, 0, 1]);
        let mask = ChannelMask::new(vec![false, false, true, true, true]).unwrap();
        let r = vote(&preds, 3, &mask).unwrap();
        assert_eq!(r.counts, vec![2, 1, 0]);
        assert_eq!(r.winner, ClassId(0));
    }

    #[test]
    fn errors() {
        assert!(ChannelMask::new(vec![false, false]).is_err());
        assert!(vote(&ids(&[0, 3]), 3, &ChannelMask::full(2)).is_err());
        assert!(vote(&ids(&[0, 1]), 3, &ChannelMask::full(3)).is_err());
    }

    #[test]
    fn antenna_masks() {
        let m = ChannelMask::antennas(90, 30, &[1, 2]).unwrap();
        assert_eq!(m.count_included(), 60);
        assert!(m.is_included(59) && !m.is_included(60));
        assert!(ChannelMask::antennas(90, 30, &[4]).is_err());
        assert!(ChannelMask::antennas(90, 30, &[]).is_err());
        let one = ChannelMask::single(5, 3).unwrap();
        assert_eq!(one.count_included(), 1);
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            preds in prop::collection::vec(0usize..5, 1..40),
            mask_bits in prop::collection::vec(any::<bool>(), 40),
            seed in any::<u64>(),
        ) {
            let m = preds.len();
            let mut included = mask_bits[..m].to_vec();
            included[0] = true;
            let mask = ChannelMask::new(included.clone()).unwrap();
            let base = vote(&ids(&preds), 5, &mask).unwrap();

            let mut order: Vec<usize> = (0..m).collect();
            use rand::seq::SliceRandom;
            order.shuffle(&mut crate::rng::substream(seed, 0));
            let p2: Vec<usize> = order.iter().map(|&i| preds[i]).collect();
            let m2 = ChannelMask::new(order.iter().map(|&i| included[i]).collect()).unwrap();
            let shuffled = vote(&ids(&p2), 5, &m2).unwrap();
            prop_assert_eq!(&base.counts, &shuffled.counts);
            prop_assert_eq!(base.winner, shuffled.winner);

            let full = vote(&ids(&preds), 5, &ChannelMask::full(m)).unwrap();
            prop_assert_eq!(full.counts.iter().sum::<usize>(), m);
        }
    }
}
