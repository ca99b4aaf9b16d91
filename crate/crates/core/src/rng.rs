//! Counter-based random streams.
//!
//! Every stochastic routine takes an explicit RNG. Parallel work obtains its
//! generators from an [`RngStream`]: a master seed plus a stream index, mapped
//! onto ChaCha8's native 64-bit stream selector. Streams with distinct indices
//! never overlap, so replications can be fanned out across workers and still be
//! bit-reproducible.

use rand::SeedableRng;
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            stream_index: 0,
        }
    }

    pub fn with_index(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Sibling stream with a different index under the same master seed.
    pub fn at(&self, stream_index: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_index,
        }
    }

    /// A fresh family of streams keyed by `(self, label)`.
    ///
    /// The new master seed is a SplitMix64 mix of the current seed and index,
    /// so nested fan-outs (sweep point, then replication chunk) stay disjoint.
    pub fn derive(&self, label: u64) -> Self {
        let mixed = splitmix64(self.master_seed ^ splitmix64(self.stream_index.wrapping_add(0x5851_F42D_4C95_7F2D)));
        Self {
            master_seed: mixed,
            stream_index: label,
        }
    }
}

/// Replications per chunk in [`replicate`]; chunk `c` draws from
/// `stream.derive(c)`, so results do not depend on the worker count.
pub const REPLICATION_CHUNK: usize = 1024;

/// Run `f` `reps` times in parallel and return the outputs in replication
/// order. Bit-reproducible for a given `stream` regardless of thread count.
pub fn replicate<T, F>(reps: usize, stream: RngStream, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng) -> Result<T> + Sync,
{
    let chunks = reps.div_ceil(REPLICATION_CHUNK);
    let parts: Result<Vec<Vec<T>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.derive(c as u64).rng();
            let len = REPLICATION_CHUNK.min(reps - c * REPLICATION_CHUNK);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect();
    Ok(parts?.into_iter().flatten().collect())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
