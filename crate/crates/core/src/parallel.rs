//! Order-preserving map over independent jobs.
//!
//! With the `parallel` feature the map runs on a rayon pool; without it every
//! [`Execution`] runs serially. Results come back in input order either way,
//! so reports do not depend on scheduling.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Serial,
    /// `None` uses rayon's global pool.
    Parallel { jobs: Option<usize> },
}

impl Execution {
    /// `--jobs` semantics: 1 is serial, 0 means "all cores".
    pub fn from_jobs(jobs: usize) -> Self {
        match jobs {
            1 => Execution::Serial,
            0 => Execution::Parallel { jobs: None },
            n => Execution::Parallel { jobs: Some(n) },
        }
    }
}

#[cfg(feature = "parallel")]
pub fn map_ordered<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match exec {
        Execution::Serial => items.iter().map(f).collect(),
        Execution::Parallel { jobs: None } => items.par_iter().map(f).collect(),
        Execution::Parallel { jobs: Some(n) } => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            Err(_) => items.par_iter().map(f).collect(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_ordered<T, R, F>(items: &[T], _exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..64).collect();
        let f = |x: &u64| x * x + 1;
        let serial = map_ordered(&items, Execution::Serial, f);
        for exec in [Execution::from_jobs(0), Execution::from_jobs(3)] {
            assert_eq!(map_ordered(&items, exec, f), serial);
        }
    }
}
