//! Canonical edge indexing.
//!
//! Edges of a graph on `v` nodes are stored as a weight vector of length
//! `v(v-1)/2`. Pairs `(i, j)` with `i > j` are ordered column-major over the
//! strict lower triangle: `(1,0), (2,0), ..., (v-1,0), (2,1), ...`. All
//! indices here are zero-based; the one-based form is
//! `k + 1 = i' - j' + (j' - 1)(2v - j') / 2` for `i' = i + 1`, `j' = j + 1`.
//!
//! Every module goes through [`EdgeIndexMap`] so the index algebra lives in
//! exactly one place.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeIndexMap {
    v: usize,
}

impl EdgeIndexMap {
    pub fn new(v: usize) -> Self {
        Self { v }
    }

    pub fn nodes(&self) -> usize {
        self.v
    }

    /// Number of unordered node pairs, `v(v-1)/2`.
    pub fn len(&self) -> usize {
        self.v * self.v.saturating_sub(1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index of the pair `(i, j)`, `i > j`.
    pub fn index(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.v || j >= i {
            return Err(Error::arg(format!(
                "edge ({i}, {j}) invalid for v = {}: need v > i > j",
                self.v
            )));
        }
        Ok(self.index_unchecked(i, j))
    }

    /// Same as [`index`](Self::index) but accepts either orientation.
    pub fn index_unordered(&self, a: usize, b: usize) -> Result<usize> {
        if a > b {
            self.index(a, b)
        } else {
            self.index(b, a)
        }
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, i: usize, j: usize) -> usize {
        debug_assert!(i > j && i < self.v);
        j * (2 * self.v - j - 1) / 2 + (i - j - 1)
    }

    /// Inverse of [`index`](Self::index).
    pub fn pair(&self, k: usize) -> Result<(usize, usize)> {
        if k >= self.len() {
            return Err(Error::arg(format!(
                "edge index {k} out of range for v = {} ({} pairs)",
                self.v,
                self.len()
            )));
        }
        // column j holds v - 1 - j entries
        let mut j = 0;
        let mut start = 0;
        loop {
            let col = self.v - 1 - j;
            if k < start + col {
                return Ok((j + 1 + (k - start), j));
            }
            start += col;
            j += 1;
        }
    }

    /// All pairs in linear-index order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.v).flat_map(move |j| (j + 1..self.v).map(move |i| (i, j)))
    }
}

/// Zero-based linear index of `(i, j)`, `i > j`, on `v` nodes.
pub fn edge_index(i: usize, j: usize, v: usize) -> Result<usize> {
    EdgeIndexMap::new(v).index(i, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // One-based form used in the literature.
    fn one_based(i: usize, j: usize, v: usize) -> usize {
        edge_index(i - 1, j - 1, v).unwrap() + 1
    }

    #[test]
    fn three_node_examples() {
        assert_eq!(one_based(2, 1, 3), 1);
        assert_eq!(one_based(3, 1, 3), 2);
        assert_eq!(one_based(3, 2, 3), 3);
    }

    #[test]
    fn matches_closed_form_offset() {
        // k = i - j + ((j-1)/2)(2v - j), one-based, evaluated in rationals
        for v in 2..12usize {
            for j in 1..v {
                for i in j + 1..=v {
                    let twice = 2 * (i - j) + (j - 1) * (2 * v - j);
                    assert_eq!(twice % 2, 0);
                    assert_eq!(one_based(i, j, v), twice / 2);
                }
            }
        }
    }

    #[test]
    fn enumeration_is_bijective() {
        for v in 1..15 {
            let map = EdgeIndexMap::new(v);
            let ks: Vec<usize> = map.pairs().map(|(i, j)| map.index(i, j).unwrap()).collect();
            assert_eq!(ks, (0..map.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn rejects_bad_pairs() {
        let map = EdgeIndexMap::new(4);
        assert!(map.index(1, 1).is_err());
        assert!(map.index(1, 2).is_err());
        assert!(map.index(4, 0).is_err());
        assert!(map.pair(6).is_err());
        assert_eq!(map.index_unordered(0, 3).unwrap(), map.index(3, 0).unwrap());
    }

    proptest! {
        #[test]
        fn pair_round_trip(v in 2usize..60, seed in 0usize..10_000) {
            let map = EdgeIndexMap::new(v);
            let k = seed % map.len();
            let (i, j) = map.pair(k).unwrap();
            prop_assert!(i > j && i < v);
            prop_assert_eq!(map.index(i, j).unwrap(), k);
        }
    }
}
