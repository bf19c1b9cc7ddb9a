//! Static row partitioning, the worker pool and parallel-region accounting.

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use crate::{Error, Result};

/// Splits `0..n` into `parts` contiguous ranges. The first `n % parts`
/// ranges get one extra element.
pub fn partition(n: usize, parts: usize) -> Vec<Range<usize>> {
    assert!(parts >= 1, "partition into zero parts");
    let base = n / parts;
    let extra = n % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Chunk ranges inside one worker's block: `n_chunks` is clamped to the
/// block length and the last chunk absorbs the remainder.
pub fn chunk_ranges(block: Range<usize>, n_chunks: usize) -> Vec<Range<usize>> {
    let len = block.len();
    if len == 0 {
        return Vec::new();
    }
    let chunks = n_chunks.clamp(1, len);
    let size = len / chunks;
    (0..chunks)
        .map(|c| {
            let s = block.start + c * size;
            let e = if c + 1 == chunks { block.end } else { s + size };
            s..e
        })
        .collect()
}

/// Carves `data` into disjoint mutable pieces following `ranges`, which must
/// be contiguous and start at 0.
pub fn split_mut<'a, T>(mut data: &'a mut [T], ranges: &[Range<usize>]) -> Vec<&'a mut [T]> {
    let mut out = Vec::with_capacity(ranges.len());
    for r in ranges {
        let (head, tail) = std::mem::take(&mut data).split_at_mut(r.len());
        out.push(head);
        data = tail;
    }
    out
}

/// Snapshot of the instrumentation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    /// Parallel regions entered.
    pub regions: u64,
    /// Worker-private accumulators merged into a shared result.
    pub merges: u64,
    /// Counted floating-point operations (analytic per-row model).
    pub flops: u64,
    /// Function evaluations.
    pub evals: u64,
}

#[derive(Debug, Default)]
pub struct Counters {
    regions: AtomicU64,
    merges: AtomicU64,
    flops: AtomicU64,
    evals: AtomicU64,
}

impl Counters {
    pub fn region(&self) {
        self.regions.fetch_add(1, Ordering::Relaxed);
    }
    pub fn merge(&self) {
        self.merges.fetch_add(1, Ordering::Relaxed);
    }
    pub fn flops(&self, n: u64) {
        self.flops.fetch_add(n, Ordering::Relaxed);
    }
    pub fn eval(&self) {
        self.evals.fetch_add(1, Ordering::Relaxed);
    }
    pub fn snapshot(&self) -> Stats {
        Stats {
            regions: self.regions.load(Ordering::Relaxed),
            merges: self.merges.load(Ordering::Relaxed),
            flops: self.flops.load(Ordering::Relaxed),
            evals: self.evals.load(Ordering::Relaxed),
        }
    }
    pub fn reset(&self) {
        self.regions.store(0, Ordering::Relaxed);
        self.merges.store(0, Ordering::Relaxed);
        self.flops.store(0, Ordering::Relaxed);
        self.evals.store(0, Ordering::Relaxed);
    }
}

/// A bounded set of workers. With one worker, or without the `parallel`
/// feature, tasks run in index order on the calling thread.
pub struct Pool {
    workers: usize,
    #[cfg(feature = "parallel")]
    inner: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Pool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pool").field("workers", &self.workers).finish()
    }
}

impl Pool {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidArgument("workers must be >= 1".into()));
        }
        #[cfg(feature = "parallel")]
        let inner = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::Pool(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self {
            workers,
            #[cfg(feature = "parallel")]
            inner,
        })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `f(0..n)` as one parallel region and returns results in task order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.inner {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().with_max_len(1).map(&f).collect());
        }
        (0..n).map(f).collect()
    }

    /// Like [`Pool::map`] but hands each task ownership of one item, typically
    /// a disjoint `&mut` slice of a shared output array.
    pub fn map_items<S, T, F>(&self, items: Vec<S>, f: F) -> Vec<T>
    where
        S: Send,
        T: Send,
        F: Fn(usize, S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.inner {
            use rayon::prelude::*;
            return pool.install(|| {
                items
                    .into_par_iter()
                    .with_max_len(1)
                    .enumerate()
                    .map(|(i, s)| f(i, s))
                    .collect()
            });
        }
        items.into_iter().enumerate().map(|(i, s)| f(i, s)).collect()
    }

    /// Average wall time of an empty parallel region over `reps` entries.
    pub fn empty_region_seconds(&self, reps: usize) -> f64 {
        let reps = reps.max(1);
        let start = Instant::now();
        for _ in 0..reps {
            let v = self.map(self.workers, std::hint::black_box);
            std::hint::black_box(v);
        }
        start.elapsed().as_secs_f64() / reps as f64
    }
}
