use kicq_core::fock::Sweeper;
use rayon::prelude::*;

/// Evaluates grid points on a dedicated rayon pool.
pub struct Pool(rayon::ThreadPool);

impl Pool {
    /// `threads = None` sizes the pool by the available parallelism.
    pub fn new(threads: Option<usize>) -> Result<Self, rayon::ThreadPoolBuildError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n.max(1));
        }
        b.build().map(Pool)
    }

    pub fn threads(&self) -> usize {
        self.0.current_num_threads()
    }
}

impl Sweeper for Pool {
    fn map<T, F>(&self, grid: &[f64], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(f64) -> T + Sync + Send,
    {
        self.0.install(|| grid.par_iter().map(|&x| f(x)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kicq_core::fock::Serial;

    #[test]
    fn order_matches_serial() {
        let grid: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let pool = Pool::new(Some(3)).unwrap();
        assert_eq!(pool.threads(), 3);
        assert_eq!(pool.map(&grid, |x| x.sin()), Serial.map(&grid, |x| x.sin()));
    }
}
