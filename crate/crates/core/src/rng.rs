//! Addressable random streams.
//!
//! Every replicate draws from its own generator keyed by the root seed and
//! its position in the study, so results do not depend on which thread ran
//! which replicate or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Position of one draw within a simulation study.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RngStream {
    pub seed: u64,
    pub scheme: u32,
    pub model: u32,
    pub replicate: u32,
    /// Redraw attempt, 0 for the first draw.
    pub attempt: u32,
}

impl RngStream {
    pub fn new(seed: u64, scheme: u32, model: u32, replicate: u32) -> Self {
        Self {
            seed,
            scheme,
            model,
            replicate,
            attempt: 0,
        }
    }

    pub fn root(seed: u64) -> Self {
        Self::new(seed, 0, 0, 0)
    }

    pub fn with_attempt(self, attempt: u32) -> Self {
        Self { attempt, ..self }
    }

    /// 256-bit key for this position.
    pub fn key(&self) -> [u8; 32] {
        let mut h = splitmix(self.seed);
        for part in [self.scheme, self.model, self.replicate, self.attempt] {
            h = splitmix(h ^ splitmix(u64::from(part).wrapping_add(GOLDEN)));
        }
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            let w = splitmix(h.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN)));
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        key
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key())
    }
}
