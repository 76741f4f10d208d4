//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! a rayon pool; without it (or with [`ExecPolicy::Sequential`]) it runs in
//! order on the calling thread. Results are always returned in input order.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecPolicy {
    Sequential,
    #[default]
    Parallel,
}

impl ExecPolicy {
    /// The parallel policy degrades to sequential when the feature is off.
    pub fn effective(self) -> ExecPolicy {
        if cfg!(feature = "parallel") {
            self
        } else {
            ExecPolicy::Sequential
        }
    }
}

pub fn par_map<T, R, F>(policy: ExecPolicy, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match policy.effective() {
        ExecPolicy::Sequential => items.iter().map(f).collect(),
        ExecPolicy::Parallel => parallel_map(items, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Runs `op` with at most `jobs` worker threads (`None` keeps the global pool).
pub fn with_jobs<R: Send>(jobs: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(jobs) = jobs {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
            return pool.install(op);
        }
    }
    let _ = jobs;
    op()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree_and_keep_order() {
        let items: Vec<u64> = (0..100).collect();
        let seq = par_map(ExecPolicy::Sequential, &items, |x| x * x);
        let par = with_jobs(Some(3), || par_map(ExecPolicy::Parallel, &items, |x| x * x));
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }
}
