use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seeded source of independent random streams.
///
/// Stream `i` is the ChaCha8 keystream keyed by the master seed with stream
/// id `i`, so the bits of a stream depend only on `(master_seed, i)` and
/// never on which other streams were drawn, or in what order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    master_seed: u64,
}

impl RandomSource {
    pub fn new(master_seed: u64) -> Self {
        RandomSource { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index);
        rng
    }

    /// An unrelated source for a named sub-experiment.
    pub fn derive(&self, label: u64) -> RandomSource {
        RandomSource::new(splitmix64(self.master_seed ^ splitmix64(label)))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
