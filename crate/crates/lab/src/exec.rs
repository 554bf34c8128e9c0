//! Thread-pool replica scheduling.

use contact_core::Replicate;
use rayon::prelude::*;

/// Runs replicas on a rayon pool. Results come back in replica order, so
/// estimates do not depend on the number of threads.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    /// `threads = None` uses every available core.
    pub fn new(threads: Option<usize>) -> Self {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n.max(1));
        }
        Self { pool: b.build().expect("thread pool") }
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Default for Pool {
    fn default() -> Self {
        Self::new(None)
    }
}

impl Replicate for Pool {
    fn run<T, F>(&self, count: u64, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(job).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use contact_core::Serial;

    #[test]
    fn order_is_independent_of_threads() {
        let job = |i: u64| contact_core::rng::derive_seed(1, i);
        let serial = Serial.run(1000, job);
        assert_eq!(Pool::new(Some(3)).run(1000, job), serial);
        assert_eq!(Pool::new(Some(1)).run(1000, job), serial);
    }
}
