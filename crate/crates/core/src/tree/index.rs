//! Binary index sets behind tree aggregation.
//!
//! Node `j` (1-based) holds the partial sum over `Λ(j) = {j - 2^{low(j)} + 1, ..., j}`
//! where `2^{low(j)}` is the lowest set bit of `j`. The prefix `[t]` is the
//! disjoint union of `Λ(j)` over `Γ(t)`, obtained by clearing the set bits of
//! `t` from lowest to highest.

use std::ops::RangeInclusive;

use crate::error::{domain, Result};

#[inline]
pub fn lowest_bit(t: usize) -> usize {
    t & t.wrapping_neg()
}

/// Number of binary levels needed for indices up to `n`: `floor(log2 n) + 1`.
#[inline]
pub fn level_count(n: usize) -> usize {
    debug_assert!(n >= 1);
    (usize::BITS - n.leading_zeros()) as usize
}

/// Rounds covered by node `j`.
pub fn lambda(j: usize) -> RangeInclusive<usize> {
    debug_assert!(j >= 1);
    (j - lowest_bit(j) + 1)..=j
}

/// Nodes whose sum makes up the prefix `[t]`, highest index first.
pub fn gamma(t: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(t.count_ones() as usize);
    let mut j = t;
    while j > 0 {
        out.push(j);
        j -= lowest_bit(j);
    }
    out
}

/// Nodes `j <= horizon` with `t` in `Λ(j)`, i.e. the nodes an update at `t` touches.
pub fn covering(t: usize, horizon: usize) -> impl Iterator<Item = usize> {
    debug_assert!(t >= 1);
    let mut j = t;
    std::iter::from_fn(move || {
        if j == 0 || j > horizon {
            return None;
        }
        let cur = j;
        j += lowest_bit(j);
        Some(cur)
    })
}

/// `Λ(t)` and `Γ(t)` for one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSets {
    pub lambda: RangeInclusive<usize>,
    pub gamma: Vec<usize>,
}

pub fn index_sets(t: usize, horizon: usize) -> Result<IndexSets> {
    if t == 0 || t > horizon {
        return Err(domain(format!("round {t} outside [1, {horizon}]")));
    }
    Ok(IndexSets {
        lambda: lambda(t),
        gamma: gamma(t),
    })
}
