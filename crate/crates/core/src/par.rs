//! Thin switch between rayon and sequential execution.
//!
//! Every helper here produces results that do not depend on the thread count:
//! maps preserve order and the pairwise reduction uses a fixed split tree.

/// Leaf size of the pairwise summation tree.
const PAIRWISE_LEAF: usize = 64;

pub fn num_threads() -> usize {
    #[cfg(feature = "parallel")]
    return rayon::current_num_threads();

    #[cfg(not(feature = "parallel"))]
    return 1;
}

/// Ordered map over `0..len`. Runs on the rayon pool when `parallel` is set and
/// the feature is enabled.
pub fn map_indexed<R, F>(len: usize, parallel: bool, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }

    let _ = parallel;
    (0..len).map(f).collect()
}

pub fn join<A, B, RA, RB>(parallel: bool, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return rayon::join(a, b);
    }

    let _ = parallel;
    (a(), b())
}

/// Pairwise sum of `leaf(i)` for `i` in `lo..hi` with a fixed split tree.
///
/// `zero` must be the additive identity; `add` folds the right operand into
/// the left one.
pub fn pairwise_sum<T, L, A>(lo: usize, hi: usize, parallel: bool, zero: &T, leaf: &L, add: &A) -> T
where
    T: Clone + Send + Sync,
    L: Fn(usize) -> T + Sync,
    A: Fn(&mut T, &T) + Sync,
{
    if hi - lo <= PAIRWISE_LEAF {
        let mut acc = zero.clone();
        for i in lo..hi {
            add(&mut acc, &leaf(i));
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    let (mut left, right) = join(
        parallel,
        || pairwise_sum(lo, mid, parallel, zero, leaf, add),
        || pairwise_sum(mid, hi, parallel, zero, leaf, add),
    );
    add(&mut left, &right);
    left
}
