//! Sequential / data-parallel execution switch.
//!
//! Every parallel loop in the crate maps an index range to owned partial results and
//! reduces them in index order, so the output does not depend on the schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise sequential.
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `(0..len).map(f).collect()` in index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Apply `f` to each item of a slice, collecting results in order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Mutate fixed-size chunks of `data` in place; `f` receives the chunk index.
    pub fn for_chunks_mut<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let a = Exec::Parallel.map(1000, |i| i * i);
        let b = Exec::Sequential.map(1000, |i| i * i);
        assert_eq!(a, b);
    }

    #[test]
    fn chunks_cover_everything() {
        let mut v = vec![0usize; 103];
        Exec::Parallel.for_chunks_mut(&mut v, 10, |ci, c| {
            for (j, x) in c.iter_mut().enumerate() {
                *x = ci * 10 + j;
            }
        });
        assert!(v.iter().enumerate().all(|(i, &x)| i == x));
    }
}
