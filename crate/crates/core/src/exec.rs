//! Sequential/parallel dispatch for the data-parallel sweeps.
//!
//! Without the `parallel` feature every [`Exec`] value runs sequentially, so
//! callers never need their own `cfg` gates.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether work actually fans out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Order-preserving map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving map over `0..n`.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Fallible order-preserving map; returns the first error in index order.
    pub fn try_map<T, R, E, F>(self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree_and_keep_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = Exec::Sequential.map(&xs, |x| x * x + 1);
        let par = Exec::Parallel.map(&xs, |x| x * x + 1);
        assert_eq!(seq, par);
        assert_eq!(seq[10], 101);
        assert_eq!(Exec::Parallel.map_range(5, |i| i * 2), vec![0, 2, 4, 6, 8]);
    }

    #[test]
    fn try_map_reports_first_error() {
        let xs = [1, 2, -3, 4, -5];
        let r: Result<Vec<i32>, i32> =
            Exec::Parallel.try_map(&xs, |&x| if x < 0 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(-3));
    }
}
