//! Reproducible random streams.
//!
//! Every draw in the crate comes from a [`RandomSource`] keyed by
//! `(seed, stream)`. Streams are independent ChaCha8 streams of the same key,
//! so replica `r` of an ensemble always sees the same numbers regardless of
//! how replicas are scheduled across threads.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomSource {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Run `f` once per replica with stream `replica`, returning results in replica order.
pub fn run_replicas<R, F>(seed: u64, replicas: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &mut RandomSource) -> R + Sync + Send,
{
    let one = |r: usize| {
        let mut rng = RandomSource::new(seed, r as u64);
        f(r, &mut rng)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..replicas).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..replicas).map(one).collect()
    }
}
