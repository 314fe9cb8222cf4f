use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use crate::error::Error;
use crate::error::Result;

/// How independent samples are evaluated. Results never depend on the choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Work-stealing pool with this many threads; falls back to sequential
    /// when the crate is built without the `parallel` feature.
    Parallel {
        workers: usize,
    },
}

impl Execution {
    pub fn with_workers(workers: usize) -> Self {
        if workers <= 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { workers }
        }
    }
}

/// Generator for sample `index`: the ChaCha stream selected by the index,
/// keyed by the run seed. Independent of evaluation order.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Evaluate `f` on 0..count and return the results in index order.
pub fn map_indexed<T, F>(count: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => Ok((0..count).map(f).collect()),
        Execution::Parallel { workers } => parallel_map(count, workers, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(count: usize, _workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    Ok((0..count).map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn order_and_values_independent_of_workers() {
        let f = |i: usize| sample_rng(42, i as u64).random::<u64>();
        let seq = map_indexed(500, Execution::Sequential, f).unwrap();
        let par = map_indexed(500, Execution::Parallel { workers: 4 }, f).unwrap();
        assert_eq!(seq, par);
        assert_ne!(seq[0], seq[1]);
    }
}
