//! Deterministic replica execution.
//!
//! Every Monte Carlo driver in the crate funnels through [`Execution`]. Work
//! is cut into fixed-size batches of replicas; each replica draws from its
//! own ChaCha stream selected by `(seed, replica index)`, each batch folds its
//! replicas in index order, and batch results are merged in batch order. The
//! output is therefore bit-identical whether batches run on one thread or
//! many, and whether or not the `parallel` feature is enabled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Replicas per batch. Part of the reproducibility contract: changing it
/// changes the floating-point merge order.
pub const BATCH_SIZE: u64 = 1024;

/// How replica loops are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon thread pool. `workers: None` uses the global pool. Falls back
    /// to sequential execution when built without the `parallel` feature.
    #[default]
    Parallel,
    ParallelWith { workers: usize },
}

impl Execution {
    pub fn with_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            Some(workers) => Execution::ParallelWith { workers },
            None => Execution::Parallel,
        }
    }

    /// Order-preserving map over `items`.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Execution::ParallelWith { workers } => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(*workers).build() {
                    Ok(pool) => pool.install(|| items.par_iter().map(f).collect()),
                    Err(_) => items.iter().map(f).collect(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            _ => items.iter().map(f).collect(),
        }
    }

    /// Runs `replicas` independent replicas and folds them into one
    /// accumulator.
    ///
    /// `init` creates an empty accumulator, `each` folds replica `i` (with its
    /// private rng) into the batch accumulator, and `merge` combines batch
    /// accumulators left to right.
    pub fn replicate<A, I, F, M>(&self, replicas: u64, seed: u64, init: I, each: F, mut merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(&mut ChaCha8Rng, u64, &mut A) + Sync + Send,
        M: FnMut(&mut A, A),
    {
        let streams = StreamFactory::new(seed);
        let batches: Vec<(u64, u64)> = (0..replicas.div_ceil(BATCH_SIZE))
            .map(|b| (b * BATCH_SIZE, ((b + 1) * BATCH_SIZE).min(replicas)))
            .collect();
        let partials = self.map(&batches, |&(lo, hi)| {
            let mut acc = init();
            for replica in lo..hi {
                let mut rng = streams.stream(replica);
                each(&mut rng, replica, &mut acc);
            }
            acc
        });
        let mut total = init();
        for part in partials {
            merge(&mut total, part);
        }
        total
    }
}

/// Counter-based split of one master seed into independent ChaCha streams.
#[derive(Clone, Copy, Debug)]
pub struct StreamFactory {
    key: [u8; 32],
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        StreamFactory { key: ChaCha8Rng::seed_from_u64(seed).get_seed() }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

/// Derives a seed for a named sub-computation (pilot runs, second oracle)
/// so that it does not share streams with the master seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
