//! Budgeted, sharded enumeration of `R^n`.

use std::ops::Range;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::Ring;
use crate::error::{Error, Result};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Upper limit on enumerated points, plus the shard count used for parallel
/// enumeration. Results never depend on the shard count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_points: u64,
    pub shards: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(DEFAULT_BUDGET)
    }
}

impl Budget {
    pub fn new(max_points: u64) -> Self {
        Budget { max_points, shards: 1 }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards.max(1);
        self
    }

    /// Returns the cardinality as `u64` if it is within budget.
    pub fn admit(&self, cardinality: &BigUint) -> Result<u64> {
        match cardinality.to_u64() {
            Some(c) if c <= self.max_points => Ok(c),
            _ => Err(Error::BudgetExceeded {
                cardinality: cardinality.clone(),
                budget: self.max_points,
            }),
        }
    }

    /// Same as [`Budget::admit`] for a size given as `base^exp`.
    pub fn admit_power(&self, base: u64, exp: usize) -> Result<u64> {
        self.admit(&BigUint::from(base).pow(exp as u32))
    }
}

/// The module `R^n`, enumerated in lexicographic order of coordinates
/// (first coordinate most significant).
#[derive(Clone, Debug)]
pub struct DomainSpec {
    pub ring: Ring,
    pub n: usize,
}

impl DomainSpec {
    pub fn new(ring: Ring, n: usize) -> Self {
        DomainSpec { ring, n }
    }

    pub fn cardinality(&self) -> BigUint {
        BigUint::from(self.ring.order()).pow(self.n as u32)
    }

    /// Index range covered by shard `index` of `total`.
    pub fn shard_range(cardinality: u64, index: usize, total: usize) -> Range<u64> {
        let total = total as u128;
        let lo = (cardinality as u128 * index as u128 / total) as u64;
        let hi = (cardinality as u128 * (index as u128 + 1) / total) as u64;
        lo..hi
    }

    pub fn point_at(&self, mut index: u64) -> Vec<u32> {
        let q = self.ring.order() as u64;
        let mut point = vec![0u32; self.n];
        for slot in point.iter_mut().rev() {
            *slot = (index % q) as u32;
            index /= q;
        }
        point
    }

    /// Points of shard `index` of `total`, in global order.
    pub fn enumerate_shard(&self, index: usize, total: usize, budget: &Budget) -> Result<DomainIter> {
        if total == 0 || index >= total {
            return Err(Error::precondition(format!("shard {index} of {total} is invalid")));
        }
        let card = budget.admit(&self.cardinality())?;
        let range = Self::shard_range(card, index, total);
        Ok(DomainIter {
            q: self.ring.order(),
            current: self.point_at(range.start),
            remaining: range.end - range.start,
        })
    }

    pub fn enumerate(&self, budget: &Budget) -> Result<DomainIter> {
        self.enumerate_shard(0, 1, budget)
    }

    /// Calls `f` on every point with index in `range`, reusing one buffer.
    pub fn for_each_in_range(&self, range: Range<u64>, mut f: impl FnMut(&[u32])) {
        if range.is_empty() {
            return;
        }
        let q = self.ring.order();
        let mut point = self.point_at(range.start);
        for _ in range {
            f(&point);
            advance(&mut point, q);
        }
    }

    /// Shard-parallel fold over the whole domain. Shards are merged in shard
    /// order, so any associative `merge` gives a shard-count independent result.
    pub fn fold_shards<T, I, F, M>(&self, budget: &Budget, init: I, fold: F, merge: M) -> Result<T>
    where
        T: Send,
        I: Fn() -> T + Sync,
        F: Fn(&mut T, &[u32]) + Sync,
        M: Fn(T, T) -> T,
    {
        let card = budget.admit(&self.cardinality())?;
        let shards = budget.shards.max(1);
        let run = |i: usize| {
            let mut acc = init();
            self.for_each_in_range(Self::shard_range(card, i, shards), |pt| fold(&mut acc, pt));
            acc
        };
        let parts: Vec<T> = if shards == 1 {
            vec![run(0)]
        } else {
            (0..shards).into_par_iter().map(run).collect()
        };
        let mut parts = parts.into_iter();
        let first = parts.next().expect("at least one shard");
        Ok(parts.fold(first, merge))
    }
}

#[inline]
fn advance(point: &mut [u32], q: u32) {
    for slot in point.iter_mut().rev() {
        *slot += 1;
        if *slot < q {
            return;
        }
        *slot = 0;
    }
}

/// Iterator over a contiguous run of points.
pub struct DomainIter {
    q: u32,
    current: Vec<u32>,
    remaining: u64,
}

impl Iterator for DomainIter {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.current.clone();
        advance(&mut self.current, self.q);
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.remaining as usize;
        (r, Some(r))
    }
}
