//! Fixed-universe component index sets.
//!
//! A [`ComponentSet`] is a bitset over the component universe `{0, .., n-1}`.
//! For systems of up to 64 components the representation is a single inline
//! `u64` mask; larger systems spill to additional blocks. All per-element
//! operations are constant time.

use smallvec::SmallVec;

const BLOCK_BITS: usize = 64;

/// A set of component indices over a fixed universe of size `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ComponentSet {
    n: usize,
    blocks: SmallVec<[u64; 1]>,
}

impl ComponentSet {
    /// The empty set over a universe of `n` components.
    pub fn empty(n: usize) -> Self {
        let nblocks = n.div_ceil(BLOCK_BITS).max(1);
        Self {
            n,
            blocks: smallvec::smallvec![0; nblocks],
        }
    }

    /// The full set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for b in 0..s.blocks.len() {
            s.blocks[b] = u64::MAX;
        }
        s.trim();
        s
    }

    /// Build a set from indices; indices must be `< n`.
    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut s = Self::empty(n);
        for &i in indices {
            s.insert(i);
        }
        s
    }

    /// Build a set over `n <= 64` components from a bitmask.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        assert!(n <= 64, "mask constructor requires n <= 64");
        let mut s = Self::empty(n);
        s.blocks[0] = mask & Self::tail_mask(n);
        s
    }

    /// Universe size.
    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.n);
        self.blocks[i / BLOCK_BITS] |= 1 << (i % BLOCK_BITS);
    }

    pub fn remove(&mut self, i: usize) {
        debug_assert!(i < self.n);
        self.blocks[i / BLOCK_BITS] &= !(1 << (i % BLOCK_BITS));
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.blocks[i / BLOCK_BITS] & (1 << (i % BLOCK_BITS)) != 0
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    /// Complement within the universe.
    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for b in out.blocks.iter_mut() {
            *b = !*b;
        }
        out.trim();
        out
    }

    pub fn union_with(&mut self, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.blocks.iter_mut().zip(other.blocks.iter()) {
            *a |= b;
        }
    }

    pub fn difference_with(&mut self, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.blocks.iter_mut().zip(other.blocks.iter()) {
            *a &= !b;
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.blocks
            .iter()
            .zip(other.blocks.iter())
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint_from(&self, other: &Self) -> bool {
        self.blocks
            .iter()
            .zip(other.blocks.iter())
            .all(|(a, b)| a & b == 0)
    }

    /// Iterate members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().enumerate().flat_map(|(bi, &block)| {
            let base = bi * BLOCK_BITS;
            BitIter { block }.map(move |bit| base + bit)
        })
    }

    /// Members in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    fn tail_mask(n: usize) -> u64 {
        if n % BLOCK_BITS == 0 {
            u64::MAX
        } else {
            (1u64 << (n % BLOCK_BITS)) - 1
        }
    }

    fn trim(&mut self) {
        if self.n == 0 {
            self.blocks[0] = 0;
            return;
        }
        let last = (self.n - 1) / BLOCK_BITS;
        for b in self.blocks.iter_mut().skip(last + 1) {
            *b = 0;
        }
        self.blocks[last] &= Self::tail_mask(self.n);
    }
}

struct BitIter {
    block: u64,
}

impl Iterator for BitIter {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.block == 0 {
            return None;
        }
        let bit = self.block.trailing_zeros() as usize;
        self.block &= self.block - 1;
        Some(bit)
    }
}

/// Enumerate the k-element subsets of `pool` in lexicographic order,
/// calling `visit` with each combination (as indices into the original
/// universe, ascending). `visit` returns `false` to stop early.
///
/// The lexicographic order over the sorted pool means `{pool[0], pool[1]}`
/// comes before `{pool[0], pool[2]}`, and so on.
pub fn for_each_combination<F>(pool: &[usize], k: usize, mut visit: F)
where
    F: FnMut(&[usize]) -> bool,
{
    if k == 0 || k > pool.len() {
        return;
    }
    let n = pool.len();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut current: Vec<usize> = idx.iter().map(|&i| pool[i]).collect();
    loop {
        if !visit(&current) {
            return;
        }
        // rightmost position that has room to advance
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
        for (c, &p) in current.iter_mut().zip(idx.iter()) {
            *c = pool[p];
        }
    }
}
