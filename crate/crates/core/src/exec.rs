//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) work is spread with rayon.
//! Without it, or with [`Execution::Sequential`], everything runs on the
//! calling thread. Results never depend on the mode: ordered maps keep the
//! input order, and reductions are only used with associative, commutative
//! merges.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps every index in `range`, returning results in index order.
pub fn map_indexed<T, F>(mode: Execution, range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return range.into_par_iter().map(f).collect();
    }
    let _ = mode;
    range.map(f).collect()
}

/// Folds every index in `range` into per-worker accumulators and merges them.
/// `merge` must be associative and commutative for mode-independent output.
pub fn fold_indexed<A, Id, F, M>(mode: Execution, range: Range<u64>, identity: Id, fold: F, merge: M) -> A
where
    A: Send,
    Id: Fn() -> A + Sync + Send,
    F: Fn(A, u64) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return range
            .into_par_iter()
            .fold(&identity, &fold)
            .reduce(&identity, &merge);
    }
    let _ = (mode, &merge);
    range.fold(identity(), fold)
}
