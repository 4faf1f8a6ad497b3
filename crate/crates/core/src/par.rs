//! Execution mode for the data-parallel kernels.
//!
//! With the `parallel` feature disabled every mode runs sequentially.

/// Selects sequential or rayon-backed execution. Results never depend on
/// the mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

impl ExecMode {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }

    /// Number of chunks worth splitting a job of `len` items into.
    pub(crate) fn chunks(self, len: usize, min_chunk: usize) -> usize {
        if !self.is_parallel() || len < 2 * min_chunk {
            return 1;
        }
        #[cfg(feature = "parallel")]
        {
            (len / min_chunk).clamp(1, 4 * rayon::current_num_threads())
        }
        #[cfg(not(feature = "parallel"))]
        {
            1
        }
    }
}

/// Order-preserving map.
pub(crate) fn map<T, R, F>(mode: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}
