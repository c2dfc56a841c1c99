//! Data-parallel map with a sequential fallback.
//!
//! The `parallel` feature (on by default) backs [`map_auto`] with rayon.
//! Compiling with `--no-default-features` removes rayon entirely and every
//! call site degrades to a plain sequential map. [`set_sequential`] forces
//! the sequential path at runtime even when rayon is compiled in, which is
//! what the benchmark suite uses to compare both paths in one binary.
//!
//! Determinism: results are placed by index, never reduced in thread order,
//! so output is identical between the parallel and sequential paths.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force all [`map_auto`] calls onto the sequential path.
pub fn set_sequential(force: bool) {
    FORCE_SEQUENTIAL.store(force, Ordering::Relaxed);
}

/// True when [`map_auto`] would run sequentially.
pub fn is_sequential() -> bool {
    !cfg!(feature = "parallel") || FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

/// Sequential map, always available.
pub fn map_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Parallel map over a slice; output order matches input order.
#[cfg(feature = "parallel")]
pub fn map_par<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Map over indices `0..n`; output order matches index order.
#[cfg(feature = "parallel")]
pub fn map_indices<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if is_sequential() {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indices<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

/// Map that uses rayon when compiled in and not overridden, else sequential.
#[cfg(feature = "parallel")]
pub fn map_auto<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if is_sequential() {
        map_seq(items, f)
    } else {
        map_par(items, f)
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_auto<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    map_seq(items, f)
}

/// Serializes tests that flip the global sequential override.
#[cfg(test)]
pub(crate) fn sequential_test_lock() -> std::sync::MutexGuard<'static, ()> {
    static LOCK: std::sync::Mutex<()> = std::sync::Mutex::new(());
    LOCK.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}
