//! Named random streams split from one master seed.
//!
//! Each consumer draws from its own ChaCha stream keyed by
//! `(master seed, stream, index)`, so adding a stream or changing the
//! evaluation order never perturbs the draws of another consumer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Mobility,
    Shadowing,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Mobility => 1,
            Stream::Shadowing => 2,
        }
    }
}

/// Independent generator for `(stream, index)` under `master_seed`.
pub fn stream_rng(master_seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((stream.tag() << 48) ^ index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |seed, stream, index| -> Vec<u64> {
            let mut rng = stream_rng(seed, stream, index);
            (0..4).map(|_| rng.random()).collect()
        };
        let a = draw(7, Stream::Mobility, 3);
        let b = draw(7, Stream::Mobility, 3);
        assert_eq!(a, b);

        assert_ne!(a, draw(7, Stream::Mobility, 4));
        assert_ne!(a, draw(7, Stream::Shadowing, 3));
        assert_ne!(a, draw(8, Stream::Mobility, 3));
    }
}
