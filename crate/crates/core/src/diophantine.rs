//! Solution sets of `∑_{j=1}^{m} j·k_j = z` over nonnegative integers.
//!
//! A solution is the multiplicity vector of a partition of `z` into parts of
//! size at most `m`. Sets are stored flat and kept in reverse-lexicographic
//! order (descending in `k_1`, then `k_2`, ...), so the first element is
//! `(z, 0, ..., 0)` and membership lookups are binary searches.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{invalid, Error, Result};

/// Default memory budget for a single solution set: 2 GiB.
pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;

/// All nonnegative `(k_1, ..., k_m)` with `∑ j·k_j = z`, in reverse-lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionSet {
    m: usize,
    z: usize,
    data: Vec<u32>,
}

impl SolutionSet {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// The `index`-th solution.
    pub fn get(&self, index: usize) -> &[u32] {
        let s = &self.data[index * self.m..(index + 1) * self.m];
        debug_assert_eq!(weighted_sum(s), self.z as u64);
        s
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.data.chunks_exact(self.m)
    }

    /// Position of `k` in the fixed ordering.
    pub fn index_of(&self, k: &[u32]) -> Result<usize> {
        if k.len() != self.m {
            return Err(Error::NotFound(k.to_vec()));
        }
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            // descending order: elements before `k` compare greater
            match self.get(mid).cmp(k) {
                Ordering::Equal => return Ok(mid),
                Ordering::Greater => lo = mid + 1,
                Ordering::Less => hi = mid,
            }
        }
        Err(Error::NotFound(k.to_vec()))
    }

    /// The two proposal candidates of the neighbour move for state `index`:
    /// interior `ℓ` gives `(ℓ-1, ℓ+1)`, the first element gives
    /// `(second, last)` and the last gives `(first, second-to-last)`.
    pub fn neighbors(&self, index: usize) -> Result<(usize, usize)> {
        let n = self.len();
        if n < 2 {
            return Err(Error::NoNeighbors);
        }
        if index >= n {
            return Err(invalid(format!(
                "index {index} out of range for {n} solutions"
            )));
        }
        Ok(if index == 0 {
            (1, n - 1)
        } else if index == n - 1 {
            (0, n - 2)
        } else {
            (index - 1, index + 1)
        })
    }
}

fn weighted_sum(k: &[u32]) -> u64 {
    k.iter()
        .enumerate()
        .map(|(j, &c)| (j as u64 + 1) * c as u64)
        .sum()
}

/// Number of partitions of `z` into parts of size at most `m`, saturating at
/// `u128::MAX`.
pub fn bounded_partition_count(m: usize, z: usize) -> u128 {
    let mut ways = vec![0u128; z + 1];
    ways[0] = 1;
    for part in 1..=m.min(z) {
        for r in part..=z {
            ways[r] = ways[r].saturating_add(ways[r - part]);
        }
    }
    ways[z]
}

/// Bytes needed to store the solution set of `(m, z)`.
pub fn estimated_bytes(m: usize, z: usize) -> u128 {
    bounded_partition_count(m, z).saturating_mul(m as u128 * std::mem::size_of::<u32>() as u128)
}

fn check_budget(m: usize, z: usize, budget: usize) -> Result<()> {
    let bytes = estimated_bytes(m, z);
    if bytes > budget as u128 {
        return Err(Error::ResourceLimit {
            m,
            z,
            count: bounded_partition_count(m, z),
            bytes,
            budget,
        });
    }
    Ok(())
}

/// Enumerates the solution set of `(m, z)` under the default memory budget.
pub fn enumerate(m: usize, z: usize) -> Result<SolutionSet> {
    enumerate_with_budget(m, z, DEFAULT_MEMORY_BUDGET)
}

pub fn enumerate_with_budget(m: usize, z: usize, budget: usize) -> Result<SolutionSet> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    check_budget(m, z, budget)?;
    Ok(enumerate_unchecked(m, z))
}

fn enumerate_unchecked(m: usize, z: usize) -> SolutionSet {
    // feasible[j][r]: r is representable with parts j+1..=m (0-based j)
    let mut feasible = vec![vec![false; z + 1]; m + 1];
    feasible[m][0] = true;
    for j in (0..m).rev() {
        let part = j + 1;
        for r in 0..=z {
            feasible[j][r] = feasible[j + 1][r] || (r >= part && feasible[j][r - part]);
        }
    }

    let count = bounded_partition_count(m, z) as usize;
    let mut data = Vec::with_capacity(count * m);
    let mut current = vec![0u32; m];
    descend(0, z, m, &feasible, &mut current, &mut data);
    debug_assert_eq!(data.len(), count * m);
    SolutionSet { m, z, data }
}

fn descend(
    j: usize,
    rem: usize,
    m: usize,
    feasible: &[Vec<bool>],
    current: &mut [u32],
    out: &mut Vec<u32>,
) {
    if j == m {
        if rem == 0 {
            out.extend_from_slice(current);
        }
        return;
    }
    let part = j + 1;
    for k in (0..=rem / part).rev() {
        let rest = rem - k * part;
        if feasible[j + 1][rest] {
            current[j] = k as u32;
            descend(j + 1, rest, m, feasible, current, out);
        }
    }
    current[j] = 0;
}

/// Process-wide cache of solution sets keyed by `(m, z)`.
///
/// Each key is enumerated at most once; concurrent requests for the same
/// missing key wait on a single enumeration.
type Slot = Arc<OnceLock<Arc<SolutionSet>>>;

#[derive(Debug)]
pub struct SolutionCache {
    slots: Mutex<HashMap<(usize, usize), Slot>>,
    memory_budget: usize,
    enumerations: AtomicUsize,
}

impl Default for SolutionCache {
    fn default() -> Self {
        Self::new(DEFAULT_MEMORY_BUDGET)
    }
}

impl SolutionCache {
    pub fn new(memory_budget: usize) -> Self {
        Self {
            slots: Mutex::new(HashMap::new()),
            memory_budget,
            enumerations: AtomicUsize::new(0),
        }
    }

    pub fn memory_budget(&self) -> usize {
        self.memory_budget
    }

    pub fn get(&self, m: usize, z: usize) -> Result<Arc<SolutionSet>> {
        if m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        let slot = {
            let mut slots = self.slots.lock().expect("solution cache poisoned");
            if let Some(set) = slots.get(&(m, z)).and_then(|s| s.get()) {
                return Ok(Arc::clone(set));
            }
            check_budget(m, z, self.memory_budget)?;
            Arc::clone(slots.entry((m, z)).or_default())
        };
        let set = slot.get_or_init(|| {
            self.enumerations.fetch_add(1, AtomicOrdering::Relaxed);
            Arc::new(enumerate_unchecked(m, z))
        });
        Ok(Arc::clone(set))
    }

    /// Number of enumerations performed so far.
    pub fn enumerations(&self) -> usize {
        self.enumerations.load(AtomicOrdering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.slots.lock().expect("solution cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.slots.lock().expect("solution cache poisoned").clear();
    }
}
