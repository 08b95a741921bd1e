//! Thin facade over rayon. Each helper has a sequential twin that is always
//! compiled, so benches can compare both paths inside one binary and builds
//! without the `parallel` feature fall back transparently.

/// Map a range in parallel (or sequentially without the feature).
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_range_seq(n, f)
    }
}

/// Sequential twin of [`map_range`].
pub fn map_range_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Map over owned items in parallel, preserving order.
pub fn map_items<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_items_seq(items, f)
    }
}

/// Sequential twin of [`map_items`].
pub fn map_items_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Reduce `f(0) + f(1) + ... + f(n-1)` with an associative `add`.
pub fn reduce_range<S, F, A, I>(n: usize, identity: I, f: F, add: A) -> S
where
    S: Send,
    F: Fn(usize) -> S + Sync + Send,
    A: Fn(S, S) -> S + Sync + Send,
    I: Fn() -> S + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(&f).reduce(&identity, &add)
    }
    #[cfg(not(feature = "parallel"))]
    {
        reduce_range_seq(n, identity, f, add)
    }
}

/// Sequential twin of [`reduce_range`].
pub fn reduce_range_seq<S, F, A, I>(n: usize, identity: I, f: F, add: A) -> S
where
    F: Fn(usize) -> S,
    A: Fn(S, S) -> S,
    I: Fn() -> S,
{
    (0..n).fold(identity(), |acc, i| add(acc, f(i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let a = map_range(100, |i| i * i);
        let b = map_range_seq(100, |i| i * i);
        assert_eq!(a, b);
        let s = reduce_range(1000, || 0u64, |i| i as u64, |x, y| x + y);
        let t = reduce_range_seq(1000, || 0u64, |i| i as u64, |x, y| x + y);
        assert_eq!(s, t);
        assert_eq!(s, 499_500);
    }
}
