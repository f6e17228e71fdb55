//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over rayon; without
//! it every helper degrades to a plain iterator. Results are always returned
//! in input order, so callers never observe scheduling.

/// How many workers a batch operation may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Run on the calling thread.
    Sequential,
    /// Use a dedicated pool with this many threads.
    Threads(usize),
    /// Use the global rayon pool.
    #[default]
    Auto,
}

impl Parallelism {
    /// `0` and `1` mean sequential; anything larger gets a pool of that size.
    pub fn from_degree(degree: usize) -> Self {
        if degree <= 1 {
            Parallelism::Sequential
        } else {
            Parallelism::Threads(degree)
        }
    }
}

/// Evaluates `f(0..count)` and returns the results in index order.
pub fn map_range<T, F>(count: usize, parallelism: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    imp::map_range(count, parallelism, f)
}

/// Maps over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], parallelism: Parallelism, f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_range(items.len(), parallelism, |i| f(&items[i]))
}

#[cfg(feature = "parallel")]
mod imp {
    use super::Parallelism;
    use rayon::prelude::*;

    pub fn map_range<T, F>(count: usize, parallelism: Parallelism, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match parallelism {
            Parallelism::Sequential => (0..count).map(f).collect(),
            Parallelism::Auto => (0..count).into_par_iter().map(f).collect(),
            Parallelism::Threads(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
                Err(e) => {
                    log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                    (0..count).into_par_iter().map(f).collect()
                }
            },
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    use super::Parallelism;

    pub fn map_range<T, F>(count: usize, _parallelism: Parallelism, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_every_mode() {
        let expect: Vec<usize> = (0..500).map(|i| i * i).collect();
        for p in [Parallelism::Sequential, Parallelism::Auto, Parallelism::Threads(3)] {
            assert_eq!(map_range(500, p, |i| i * i), expect);
        }
    }

    #[test]
    fn degree_mapping() {
        assert_eq!(Parallelism::from_degree(0), Parallelism::Sequential);
        assert_eq!(Parallelism::from_degree(1), Parallelism::Sequential);
        assert_eq!(Parallelism::from_degree(8), Parallelism::Threads(8));
    }
}
