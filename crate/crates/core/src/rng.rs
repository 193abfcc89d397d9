//! Deterministic randomness.
//!
//! Every randomized routine takes an explicit `u64` seed. The generator is
//! ChaCha8 (`rand_chacha`) seeded through `SeedableRng::seed_from_u64`;
//! Gaussian draws use the `rand_distr` ziggurat sampler. Both are value-stable
//! within their major versions, so a given seed reproduces the same stream
//! for every release of this crate that keeps those dependencies.
//!
//! Large Monte-Carlo jobs are split into fixed-size chunks. Chunk `i` draws
//! from `seeded_rng(seed ^ i)`, which makes the result a function of
//! `(seed, chunk_size)` only, independent of thread count or scheduling.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type DetRng = ChaCha8Rng;

pub const DEFAULT_CHUNK_SIZE: usize = 10_000;

pub fn seeded_rng(seed: u64) -> DetRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for chunk `chunk_index` of a job seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk_index: u64) -> DetRng {
    seeded_rng(seed ^ chunk_index)
}

/// Splits `0..n` into consecutive ranges of at most `chunk_size` items.
pub fn chunk_ranges(n: usize, chunk_size: usize) -> impl Iterator<Item = (u64, Range<usize>)> {
    let chunk_size = chunk_size.max(1);
    (0..n.div_ceil(chunk_size)).map(move |i| {
        let start = i * chunk_size;
        (i as u64, start..(start + chunk_size).min(n))
    })
}

/// Runs `f` once per chunk (in parallel) and returns the results in chunk order.
pub fn map_chunks<T, F>(n: usize, chunk_size: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut DetRng, Range<usize>) -> T + Sync,
{
    let chunks: Vec<_> = chunk_ranges(n, chunk_size).collect();
    chunks
        .into_par_iter()
        .map(|(index, range)| {
            let mut rng = chunk_rng(seed, index);
            f(&mut rng, range)
        })
        .collect()
}
