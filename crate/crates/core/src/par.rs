//! Execution strategy for the data-parallel inner loops.
//!
//! With the `parallel` feature (default) the loops run on rayon's pool;
//! without it, `Exec::Parallel` silently degrades to the sequential path.
//! Every reduction here uses a total order with an index tie-break, so the
//! result never depends on how work was scheduled.

use std::cmp::Ordering;
use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a data-parallel loop is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Maps `f` over `range`, preserving order.
    pub fn map_range<U, F>(self, range: Range<usize>, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => range.into_par_iter().map(f).collect(),
            _ => range.map(f).collect(),
        }
    }

    /// Maps `f` over a slice, preserving order.
    pub fn map_slice<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// First index in `range` (in ascending order) for which `f` yields `Some`.
    pub fn find_first<U, F>(self, range: Range<usize>, f: F) -> Option<U>
    where
        U: Send,
        F: Fn(usize) -> Option<U> + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => range.into_par_iter().find_map_first(f),
            _ => range.into_iter().find_map(f),
        }
    }

    /// Maximum of the `Some` values produced over `range` under `cmp`.
    /// Ties keep the lowest index.
    pub fn max_by<U, F, C>(self, range: Range<usize>, f: F, cmp: C) -> Option<U>
    where
        U: Send,
        F: Fn(usize) -> Option<U> + Sync + Send,
        C: Fn(&U, &U) -> Ordering + Sync + Send,
    {
        let pick = |a: Option<(usize, U)>, b: Option<(usize, U)>| match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => match cmp(&a.1, &b.1).then(b.0.cmp(&a.0)) {
                Ordering::Less => Some(b),
                _ => Some(a),
            },
        };
        let best = match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => range
                .into_par_iter()
                .map(|i| f(i).map(|u| (i, u)))
                .reduce(|| None, pick),
            _ => range.map(|i| f(i).map(|u| (i, u))).fold(None, pick),
        };
        best.map(|(_, u)| u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_by_keeps_lowest_index_on_ties() {
        for exec in [Exec::Sequential, Exec::Parallel] {
            let best = exec.max_by(0..1000, |i| Some((i % 7, i)), |a, b| a.0.cmp(&b.0));
            assert_eq!(best, Some((6, 6)));
        }
    }

    #[test]
    fn find_first_is_ordered() {
        for exec in [Exec::Sequential, Exec::Parallel] {
            let hit = exec.find_first(0..10_000, |i| (i % 97 == 96).then_some(i));
            assert_eq!(hit, Some(96));
        }
    }

    #[test]
    fn map_range_preserves_order() {
        let v = Exec::Parallel.map_range(0..100, |i| i * 2);
        assert_eq!(v, (0..100).map(|i| i * 2).collect::<Vec<_>>());
    }
}
