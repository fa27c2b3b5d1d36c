//! Execution strategy for the data-parallel kernels.
//!
//! Every kernel splits its work into fixed-size chunks whose boundaries do not
//! depend on the number of threads, and partial results are combined in chunk
//! order. Sequential and parallel execution therefore give bit-identical
//! results.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a kernel distributes its chunks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }
}

fn chunk_ranges(len: usize, chunk: usize) -> impl Iterator<Item = Range<usize>> + Clone {
    let chunk = chunk.max(1);
    (0..len.div_ceil(chunk)).map(move |i| i * chunk..((i + 1) * chunk).min(len))
}

impl Exec {
    /// Maps `f` over `[0, len)` split into chunks of `chunk` indices and
    /// returns the per-chunk results in index order.
    pub fn map_chunks<T, F>(self, len: usize, chunk: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Range<usize>) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => chunk_ranges(len, chunk).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                let ranges: Vec<_> = chunk_ranges(len, chunk).collect();
                ranges.into_par_iter().map(f).collect()
            }
        }
    }

    /// Fills `out` chunk by chunk; `f` receives the offset of the chunk and
    /// the mutable chunk itself.
    pub fn fill_chunks<T, F>(self, out: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk = chunk.max(1);
        match self {
            Exec::Sequential => out
                .chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i * chunk, c)),
            #[cfg(feature = "parallel")]
            Exec::Parallel => out
                .par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i * chunk, c)),
        }
    }
}
