//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) the maps below run on the rayon
//! pool; without it, or with [`ExecMode::Sequential`], they run on the
//! calling thread. Results are always collected in index order, so any
//! reduction performed by the caller afterwards is independent of thread
//! scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a data-parallel loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

impl ExecMode {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indices<T, F>(n: usize, mode: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, returning results in slice order.
pub fn map_slice<S, T, F>(items: &[S], mode: ExecMode, f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Counts the indices in `0..n` for which `pred` holds.
pub fn count_indices<F>(n: usize, mode: ExecMode, pred: F) -> usize
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().filter(|&i| pred(i)).count();
    }
    let _ = mode;
    (0..n).filter(|&i| pred(i)).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let seq = map_indices(1000, ExecMode::Sequential, |i| (i as f64).sqrt());
        let par = map_indices(1000, ExecMode::Parallel, |i| (i as f64).sqrt());
        assert_eq!(seq, par);
        assert_eq!(
            count_indices(1000, ExecMode::Sequential, |i| i % 3 == 0),
            count_indices(1000, ExecMode::Parallel, |i| i % 3 == 0)
        );
    }
}
