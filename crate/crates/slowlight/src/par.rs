//! Execution strategy for embarrassingly parallel loops.
//!
//! [`map`] fans work out over rayon when the `parallel` feature is enabled
//! and degrades to a plain sequential map otherwise; [`map_seq`] is always
//! sequential and exists so benchmarks can compare both paths in one build.
//!
//! Both functions collect results **in input order**, and every reduction in
//! this crate that combines mapped results does so sequentially afterwards,
//! so outputs are bit-identical regardless of thread count or feature set.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, in parallel when the `parallel` feature is on.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sequential reference implementation of [`map`].
pub fn map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
