//! Data-parallel node loops with a sequential fallback.
//!
//! With the `parallel` feature the loops run on the rayon pool; without it,
//! or after [`set_parallel(false)`](set_parallel), they run on the calling
//! thread. Reductions always sum fixed-size chunks and then combine the
//! partial sums in chunk order, so results do not depend on the schedule.

use std::ops::Add;
use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of nodes per work item and per partial sum.
pub const CHUNK: usize = 4096;

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Switch parallel execution on or off at runtime.
pub fn set_parallel(on: bool) {
    PARALLEL.store(on, Ordering::Relaxed);
}

/// Size the worker pool once per process: `1` runs on the calling thread,
/// `0` keeps the rayon default.
pub fn set_threads(k: usize) -> std::result::Result<(), String> {
    set_parallel(k != 1);
    #[cfg(feature = "parallel")]
    if k > 1 {
        return rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| e.to_string());
    }
    Ok(())
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// `out[i] = f(i)` for every index.
pub fn fill<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (o, v) in chunk.iter_mut().enumerate() {
                *v = f(base + o);
            }
        });
        return;
    }
    for (i, v) in out.iter_mut().enumerate() {
        *v = f(i);
    }
}

/// `f(i, &mut out[i])` for every index.
pub fn update<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (o, v) in chunk.iter_mut().enumerate() {
                f(base + o, v);
            }
        });
        return;
    }
    for (i, v) in out.iter_mut().enumerate() {
        f(i, v);
    }
}

/// Build a vector of length `n` with `f(i)` at position `i`.
pub fn collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send + Default + Clone,
    F: Fn(usize) -> T + Sync + Send,
{
    let mut out = vec![T::default(); n];
    fill(&mut out, f);
    out
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum<S, F>(n: usize, zero: S, f: F) -> S
where
    S: Copy + Send + Sync + Add<Output = S>,
    F: Fn(usize) -> S + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut acc = zero;
        for i in lo..hi {
            acc = acc + f(i);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    if is_parallel() {
        let parts: Vec<S> = (0..chunks).into_par_iter().map(partial).collect();
        return parts.into_iter().fold(zero, |a, b| a + b);
    }
    (0..chunks).map(partial).fold(zero, |a, b| a + b)
}

/// Deterministic maximum of `f(i)`; returns `None` when `n == 0`.
pub fn max_by_key(n: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> Option<(usize, f64)> {
    let better = |a: Option<(usize, f64)>, b: Option<(usize, f64)>| match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if y.1 > x.1 {
                Some(y)
            } else {
                Some(x)
            }
        }
    };
    let chunks = n.div_ceil(CHUNK);
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut best: Option<(usize, f64)> = None;
        for i in lo..hi {
            best = better(best, Some((i, f(i))));
        }
        best
    };
    #[cfg(feature = "parallel")]
    if is_parallel() {
        let parts: Vec<_> = (0..chunks).into_par_iter().map(partial).collect();
        return parts.into_iter().fold(None, better);
    }
    (0..chunks).map(partial).fold(None, better)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_schedule_independent() {
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64);
        set_parallel(true);
        let a = sum(100_003, 0.0, f);
        set_parallel(false);
        let b = sum(100_003, 0.0, f);
        set_parallel(true);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn fill_matches_sequential() {
        let v: Vec<f64> = collect(10_000, |i| i as f64 * 2.0);
        assert!(v.iter().enumerate().all(|(i, x)| *x == i as f64 * 2.0));
    }

    #[test]
    fn max_picks_first_largest() {
        let (i, v) = max_by_key(9000, |i| if i == 4100 || i == 8000 { 5.0 } else { 1.0 }).unwrap();
        assert_eq!((i, v), (4100, 5.0));
        assert!(max_by_key(0, |_| 0.0).is_none());
    }
}
