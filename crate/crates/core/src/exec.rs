//! Execution policy: one switch between the rayon data-parallel path and the
//! sequential fallback.
//!
//! Every kernel that fans out over independent work items (sweep points,
//! support centers, circle pairs, direction candidates) goes through
//! [`ExecPolicy::map`]. Results are always collected in input order, and all
//! floating-point reductions happen afterwards in a fixed order, so the output
//! is bit-identical regardless of policy or thread count.
//!
//! Without the `parallel` cargo feature, [`ExecPolicy::Parallel`] degrades to
//! sequential execution.

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecPolicy {
    /// Run items one after the other on the calling thread.
    Sequential,
    /// Spread items over the rayon thread pool (when the `parallel` feature is on).
    #[default]
    Parallel,
}

impl ExecPolicy {
    /// Whether this policy actually runs in parallel in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }

    /// Number of workers items are spread over: the rayon pool size, or 1.
    pub fn workers(self) -> usize {
        #[cfg(feature = "parallel")]
        if self == ExecPolicy::Parallel {
            return rayon::current_num_threads().max(1);
        }
        1
    }

    /// Map `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == ExecPolicy::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Map `f` over `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == ExecPolicy::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Fallible variant of [`ExecPolicy::map`]; the first error in input order wins.
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

/// Configure the global worker count. Returns `false` if the pool was already
/// initialised (or the build is sequential), in which case the call is a no-op.
pub fn set_worker_threads(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree_and_preserve_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = ExecPolicy::Sequential.map(&xs, |x| x * x + 1);
        let b = ExecPolicy::Parallel.map(&xs, |x| x * x + 1);
        assert_eq!(a, b);
        assert_eq!(a[10], 101);
        let c = ExecPolicy::Parallel.map_range(17, |i| i * 2);
        assert_eq!(c, (0..17).map(|i| i * 2).collect::<Vec<_>>());
    }

    #[test]
    fn try_map_reports_first_error() {
        let xs = [1, 2, 3, 4];
        let r: Result<Vec<i32>, String> = ExecPolicy::Parallel.try_map(&xs, |&x| if x >= 3 { Err(format!("bad {x}")) } else { Ok(x) });
        assert_eq!(r.unwrap_err(), "bad 3");
    }
}
