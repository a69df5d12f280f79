//! Bitmask subsets of the component index set.
//!
//! Indices are 1-based at the API boundary (`{1, 3}`) and 0-based bits
//! internally. Masks are `u32`; every subset-enumerating operation is capped
//! at [`MAX_N`] components.

use std::fmt;

use crate::error::{Error, Result};

/// Largest component count accepted by operations that enumerate subsets.
pub const MAX_N: usize = 20;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Subset(u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub const fn from_mask(mask: u32) -> Self {
        Subset(mask)
    }

    /// `{1, ..., n}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= 32);
        if n == 32 {
            Subset(u32::MAX)
        } else {
            Subset((1u32 << n) - 1)
        }
    }

    /// `{1, ..., k}`, the leading block used by exchangeable shortcuts.
    pub fn first(k: usize) -> Self {
        Self::full(k)
    }

    /// Builds a subset from 1-based indices, checking each against `n`.
    pub fn from_indices<I>(n: usize, indices: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut mask = 0u32;
        for i in indices {
            if i == 0 || i > n || i > 32 {
                return Err(Error::arg(format!("component index {i} outside 1..={n}")));
            }
            mask |= 1 << (i - 1);
        }
        Ok(Subset(mask))
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Membership test with a 1-based index.
    pub fn contains(self, i: usize) -> bool {
        (1..=32).contains(&i) && self.0 & (1 << (i - 1)) != 0
    }

    pub const fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub const fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub const fn intersects(self, other: Subset) -> bool {
        self.0 & other.0 != 0
    }

    pub const fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn complement(self, n: usize) -> Subset {
        Subset(!self.0 & Subset::full(n).0)
    }

    /// Highest 1-based index present, 0 for the empty set.
    pub fn max_index(self) -> usize {
        32 - self.0.leading_zeros() as usize
    }

    /// 1-based indices in increasing order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(bit + 1)
            }
        })
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.indices().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

/// All `k`-element subsets of `{1..n}` in increasing mask order (Gosper's hack).
pub fn k_subsets(n: usize, k: usize) -> impl Iterator<Item = Subset> {
    assert!(n <= 31, "k_subsets supports n <= 31");
    let limit = 1u32 << n;
    let mut next = if k > n {
        None
    } else if k == 0 {
        Some(0u32)
    } else {
        Some((1u32 << k) - 1)
    };
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let nxt = (((r ^ cur) >> 2) / c) | r;
            (nxt < limit && r != 0).then_some(nxt)
        };
        Some(Subset(cur))
    })
}

/// Every non-empty subset of `{1..n}` in increasing mask order.
pub fn nonempty_subsets(n: usize) -> impl Iterator<Item = Subset> {
    assert!(n <= 31);
    (1u32..(1u32 << n)).map(Subset)
}

pub(crate) fn check_cap(n: usize, what: &str) -> Result<()> {
    if n > MAX_N {
        Err(Error::Capacity(format!(
            "{what} enumerates subsets of {n} components; the limit is {MAX_N}"
        )))
    } else {
        Ok(())
    }
}
