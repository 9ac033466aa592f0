//! Order-preserving batch evaluation.
//!
//! Sweeps hand independent work items to a [`Mapper`]. Implementations may run items in
//! parallel but must return results in input order, so aggregated reports do not depend
//! on scheduling.

use alloc::vec::Vec;

pub trait Mapper: Sync {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send;
}

/// Runs every item on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Mapper for Sequential {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.iter().map(f).collect()
    }
}
