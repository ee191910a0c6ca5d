//! Monte Carlo for the subordinate Brownian motion killed on leaving a
//! domain.
//!
//! Every path draws from its own ChaCha8 stream keyed by
//! `(seed, stream id, path index)`. Paths are processed in fixed-size chunks
//! whose partial results are merged in chunk order, so every estimator is
//! bit-for-bit reproducible regardless of the number of worker threads.

mod estimators;
mod sampler;
mod walker;

pub use estimators::*;
pub use sampler::{kanter_a, sample_positive_stable, SamplerMethod, SubordinatorSampler};
pub use walker::{sample_killed_path, KilledPath, KilledPathConfig, PathState, Walker};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Paths per work unit of the parallel driver.
pub const CHUNK_PATHS: usize = 512;

/// Chunks evaluated in parallel before their results are merged.
const MERGE_BATCH: usize = 64;

pub type PathRng = ChaCha8Rng;

/// Independent generator for one path of one experiment.
pub fn path_rng(seed: u64, stream: u64, path: u64) -> PathRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path);
    rng
}

/// Accumulators that combine partial results of disjoint path sets.
pub trait Merge {
    fn merge(&mut self, other: Self);
}

/// Runs `per_path` over `n_paths` paths and merges the per-chunk
/// accumulators in a fixed order.
pub fn run_paths<A, I, P>(n_paths: usize, seed: u64, stream: u64, init: I, per_path: P) -> A
where
    A: Merge + Send,
    I: Fn() -> A + Sync,
    P: Fn(&mut A, &mut PathRng) + Sync,
{
    let n_chunks = n_paths.div_ceil(CHUNK_PATHS);
    let mut total = init();
    // bounded batches keep memory flat for large accumulators
    for batch in (0..n_chunks).collect::<Vec<_>>().chunks(MERGE_BATCH) {
        let partials: Vec<A> = batch
            .par_iter()
            .map(|&c| {
                let mut acc = init();
                let start = c * CHUNK_PATHS;
                for p in start..(start + CHUNK_PATHS).min(n_paths) {
                    let mut rng = path_rng(seed, stream, p as u64);
                    per_path(&mut acc, &mut rng);
                }
                acc
            })
            .collect();
        for part in partials {
            total.merge(part);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    struct Sum(f64, u64);

    impl Merge for Sum {
        fn merge(&mut self, other: Self) {
            self.0 += other.0;
            self.1 += other.1;
        }
    }

    #[test]
    fn driver_is_independent_of_thread_count() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                run_paths(5000, 7, 1, || Sum(0.0, 0), |acc, rng| {
                    acc.0 += rng.random::<f64>().ln();
                    acc.1 += 1;
                })
            })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1, 5000);
    }

    #[test]
    fn streams_differ() {
        let a: u64 = path_rng(1, 0, 0).random();
        let b: u64 = path_rng(1, 0, 1).random();
        let c: u64 = path_rng(1, 1, 0).random();
        let d: u64 = path_rng(2, 0, 0).random();
        assert!(a != b && a != c && a != d && b != c);
        assert_eq!(a, path_rng(1, 0, 0).random::<u64>());
    }
}
