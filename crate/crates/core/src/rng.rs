//! Counter-based random streams.
//!
//! Every consumer of randomness derives its own ChaCha stream from a master
//! seed and a short key path, e.g. `(seed, [birth_id, branch])`. Inserting or
//! removing one consumer never shifts the draws seen by another, which is what
//! makes logs replayable and lets replicas run in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Poisson};

pub type StreamRng = ChaCha8Rng;

/// Domain-separation tags for the different stream families.
pub mod tag {
    pub const BIRTH_SITES: u64 = 0x01;
    pub const TRAJECTORY: u64 = 0x02;
    pub const CHAIN: u64 = 0x03;
    pub const WALK: u64 = 0x04;
    pub const FREE_TOP: u64 = 0x05;
    pub const FREE_BLOCK: u64 = 0x06;
    pub const REPLICA: u64 = 0x07;
    pub const EMISSION: u64 = 0x08;
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed and a key path into a 256-bit ChaCha seed.
pub fn derive_seed(seed: u64, key: &[u64]) -> [u8; 32] {
    let mut state = splitmix(seed ^ 0x6A09_E667_F3BC_C908);
    for (i, k) in key.iter().enumerate() {
        state = splitmix(state ^ splitmix(k.wrapping_add(i as u64 + 1)));
    }
    let mut out = [0u8; 32];
    for (i, chunk) in out.chunks_exact_mut(8).enumerate() {
        state = splitmix(state.wrapping_add(i as u64));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    out
}

pub fn stream(seed: u64, key: &[u64]) -> StreamRng {
    ChaCha8Rng::from_seed(derive_seed(seed, key))
}

/// A 64-bit seed for a keyed sub-computation that takes its own seed.
pub fn subseed(seed: u64, key: &[u64]) -> u64 {
    let bytes = derive_seed(seed, key);
    u64::from_le_bytes(bytes[..8].try_into().expect("eight bytes"))
}

pub fn from_seed(seed: u64) -> StreamRng {
    stream(seed, &[])
}

/// Exponential variate with the given rate.
#[inline]
pub fn exp<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    debug_assert!(rate > 0.0);
    rng.sample::<f64, _>(Exp1) / rate
}

/// Poisson variate; zero for a nonpositive or non-finite mean.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if !(mean > 0.0) || !mean.is_finite() {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(d) => rng.sample(d) as u64,
        Err(_) => 0,
    }
}
