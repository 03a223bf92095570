//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs
//! on the rayon global pool. Without it, both variants run sequentially, so
//! callers never need their own `cfg` switches. Results are always returned
//! in index order, which keeps seeded computations deterministic regardless
//! of the execution mode.

/// How a batch of independent jobs is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if is_parallel_available() {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

pub fn is_parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// Evaluates `f(0), f(1), .., f(count - 1)` and collects the results in order.
pub fn map_indexed<U, F>(exec: Execution, count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

/// Maps over a slice, preserving order.
pub fn map_slice<T, U, F>(exec: Execution, data: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            data.par_iter().map(f).collect()
        }
        _ => data.iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let seq = map_indexed(Execution::Sequential, 100, |i| i * i);
        let par = map_indexed(Execution::Parallel, 100, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
        let words = ["a", "bb", "ccc"];
        assert_eq!(
            map_slice(Execution::Parallel, &words, |w| w.len()),
            vec![1, 2, 3]
        );
    }
}
