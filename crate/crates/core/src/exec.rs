//! Execution policy for the node- and point-parallel kernels.
//!
//! Reductions always split their index range into fixed-length chunks and
//! add the partial sums left to right, so `Sequential` and `Parallel` give
//! bit-identical results regardless of the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Length of the fixed reduction chunks.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Rayon data parallelism. Falls back to sequential execution when the
    /// crate is built without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `out[i] = f(i)` for every index.
    pub fn fill<F>(self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i)),
            _ => out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i)),
        }
    }

    /// Calls `f(row, slice)` for each consecutive `width`-long row of `out`.
    pub fn fill_rows<F>(self, out: &mut [f64], width: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => out
                .par_chunks_mut(width)
                .enumerate()
                .for_each(|(r, row)| f(r, row)),
            _ => out
                .chunks_mut(width)
                .enumerate()
                .for_each(|(r, row)| f(r, row)),
        }
    }

    /// Deterministic chunked sum of `f(i)` over `0..n`.
    pub fn sum<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let partial = |c: usize| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            (lo..hi).map(&f).sum::<f64>()
        };
        let chunks = n.div_ceil(CHUNK);
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..chunks)
                .into_par_iter()
                .map(partial)
                .collect::<Vec<_>>()
                .into_iter()
                .sum(),
            _ => (0..chunks).map(partial).sum(),
        }
    }

    /// Maximum of `f(i)` over `0..n`; `f64::NEG_INFINITY` when `n == 0`.
    pub fn max<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n)
                .into_par_iter()
                .map(f)
                .reduce(|| f64::NEG_INFINITY, f64::max),
            _ => (0..n).map(f).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// `(0..n).map(f).collect()`, preserving index order.
    pub fn map_collect<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }
}

/// Runs `f` with the worker pool capped at `threads` workers (when given).
pub fn with_thread_cap<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(f);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_matches_between_policies() {
        let n = 5 * CHUNK + 17;
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e3 + 1e-7 * i as f64;
        let a = Exec::Sequential.sum(n, f);
        let b = Exec::Parallel.sum(n, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn fill_rows_and_max() {
        let mut out = vec![0.0; 12];
        Exec::Parallel.fill_rows(&mut out, 3, |r, row| {
            for (k, v) in row.iter_mut().enumerate() {
                *v = (r * 3 + k) as f64;
            }
        });
        assert_eq!(out, (0..12).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(Exec::Parallel.max(12, |i| out[i]), 11.0);
        assert_eq!(Exec::Sequential.max(0, |_| 1.0), f64::NEG_INFINITY);
    }
}
