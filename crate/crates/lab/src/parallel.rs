use gelfand_core::sweep::Mapper;
use rayon::prelude::*;

/// Runs items on the rayon pool; `collect` keeps input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Mapper for Rayon {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }
}
