//! Batch execution over independent work items.
//!
//! With the `parallel` feature the items are spread over a rayon pool;
//! without it every batch runs sequentially. Results are always collected
//! in input order, and each item is computed by the same code either way, so
//! reports are bitwise identical regardless of scheduling.

use serde::{Deserialize, Serialize};

/// How batch operations are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    /// Number of worker threads; `0` uses the global pool (all cores).
    Threads(usize),
    #[default]
    Auto,
}

impl Parallelism {
    /// `1` means sequential, `0` means all available cores.
    pub fn from_degree(degree: usize) -> Self {
        match degree {
            0 => Parallelism::Auto,
            1 => Parallelism::Sequential,
            n => Parallelism::Threads(n),
        }
    }

    /// Whether this build can run batches on more than one thread.
    pub fn available() -> bool {
        cfg!(feature = "parallel")
    }
}

#[cfg(feature = "parallel")]
pub(crate) fn map<T, R, F>(items: &[T], par: Parallelism, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match par {
        Parallelism::Sequential => items.iter().map(f).collect(),
        Parallelism::Auto | Parallelism::Threads(0) => items.par_iter().map(f).collect(),
        Parallelism::Threads(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            Err(_) => items.iter().map(f).collect(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map<T, R, F>(items: &[T], _par: Parallelism, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Neumaier-compensated sum; the result depends only on the order of the
/// terms, not on how they were produced.
pub(crate) fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for t in terms {
        let next = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - next) + t;
        } else {
            comp += (t - next) + sum;
        }
        sum = next;
    }
    sum + comp
}
