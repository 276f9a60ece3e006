//! Row-parallel helpers. With the `parallel` feature rows are distributed over
//! the current rayon pool; without it they run in order. Each row is produced
//! by the same closure either way, so the output does not depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Allocates a `width * height` buffer and fills it row by row.
pub(crate) fn fill_rows<F>(width: usize, height: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    let mut out = vec![0.0; width * height];
    if width == 0 {
        return out;
    }
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| f(y, row));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| f(y, row));
    out
}

/// Maps `f` over `items`, preserving order.
pub(crate) fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
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
