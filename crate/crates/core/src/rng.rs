//! Seeded random substreams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), seeded
//! with `ChaCha8Rng::seed_from_u64(seed)` and then switched to a 64-bit
//! stream id with `set_stream`. Work items (kernels, synthetic samples,
//! cross-validation runs) each get their own stream, so results do not
//! depend on the order or thread in which items are generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_key_same_sequence() {
        let a: Vec<u64> = substream(42, 7).random_iter().take(8).collect();
        let b: Vec<u64> = substream(42, 7).random_iter().take(8).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn streams_and_seeds_differ() {
        let base: u64 = substream(42, 0).random();
        assert_ne!(base, substream(42, 1).random::<u64>());
        assert_ne!(base, substream(43, 0).random::<u64>());
    }

    #[test]
    fn first_draw_is_stable() {
        // Pins the generator algorithm; a change here breaks every stored
        // kernel file and report.
        let v: u64 = substream(0, 0).random();
        assert_eq!(v, FIRST_DRAW);
    }

    const FIRST_DRAW: u64 = 13_080_132_717_333_068_652;
}
