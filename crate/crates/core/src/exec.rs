//! Execution policy: a rayon pool when the `parallel` feature is on and more
//! than one thread is requested, plain iterators otherwise.
//!
//! Every helper here produces results that do not depend on the number of
//! worker threads. Reductions over large buffers are cut into chunks whose
//! layout depends only on the problem size, and chunk results are combined in
//! chunk order.

use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
#[cfg(feature = "parallel")]
use std::sync::Arc;

/// Number of chunk buffers materialised at once by [`Exec::sum_chunks`].
const WAVE: usize = 16;
/// Upper bound on the number of chunks a reduction is split into.
const MAX_CHUNKS: usize = 64;

#[derive(Clone)]
pub struct Exec {
    threads: usize,
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Exec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Exec").field("threads", &self.threads).finish()
    }
}

impl Default for Exec {
    fn default() -> Self {
        Self::sequential()
    }
}

impl Exec {
    pub fn sequential() -> Self {
        Exec {
            threads: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// `threads == 0` means one worker per available core. Without the
    /// `parallel` feature every request degrades to sequential execution.
    pub fn with_threads(threads: usize) -> Self {
        #[cfg(feature = "parallel")]
        {
            let n = if threads == 0 {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            } else {
                threads
            };
            if n <= 1 && threads != 0 {
                return Self::sequential();
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("failed to build rayon pool");
            Exec { threads: n, pool: Some(Arc::new(pool)) }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = threads;
            Self::sequential()
        }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }

    /// Order-preserving map.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving map over `0..n`.
    pub fn map_range<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }

    /// Order-preserving fallible map; the first error in item order wins.
    pub fn try_map<T, R, E, F>(&self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }

    /// In-place update of every element.
    pub fn for_each_mut<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(&mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            pool.install(|| items.par_iter_mut().for_each(&f));
            return;
        }
        items.iter_mut().for_each(f);
    }

    /// Sums `len`-long complex buffers produced by `fill(range, buf)` over
    /// chunks of `0..n_items`. Chunk boundaries depend only on `n_items`, so
    /// the result is bitwise identical for any thread count.
    pub fn sum_chunks<F>(&self, n_items: usize, len: usize, fill: F) -> Vec<Complex64>
    where
        F: Fn(std::ops::Range<usize>, &mut [Complex64]) + Sync + Send,
    {
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        if n_items == 0 {
            return out;
        }
        let chunk = n_items.div_ceil(MAX_CHUNKS).max(1);
        let ranges: Vec<_> = (0..n_items)
            .step_by(chunk)
            .map(|s| s..(s + chunk).min(n_items))
            .collect();
        for wave in ranges.chunks(WAVE) {
            let bufs = self.map(wave, |r| {
                let mut buf = vec![Complex64::new(0.0, 0.0); len];
                fill(r.clone(), &mut buf);
                buf
            });
            for buf in bufs {
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o += b;
                }
            }
        }
        out
    }
}
