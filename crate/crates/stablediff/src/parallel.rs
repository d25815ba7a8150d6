//! Path-parallel execution. Every item owns its random stream, so results
//! depend only on the index and are returned in index order.

use rayon::prelude::*;

/// Worker count: explicit value, else `STABLEDIFF_THREADS`, else all cores.
pub fn resolve_threads(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var("STABLEDIFF_THREADS").ok().and_then(|s| s.trim().parse().ok()))
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// `f(0), …, f(n-1)` on a pool of `threads` workers.
pub fn map_indexed<T, F>(n: u64, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_threads() {
        let a = map_indexed(1000, 1, |i| i * i);
        let b = map_indexed(1000, 4, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(resolve_threads(Some(3)), 3);
    }
}
