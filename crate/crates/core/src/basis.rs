//! Occupation-number basis truncated by excitation number.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Largest chain the bitmask representation supports.
pub const MAX_SITES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Truncation {
    /// Keep states with at most this many excitations.
    Max(usize),
    Full,
}

/// Ordered list of occupation bitmasks (bit `l - 1` is site `l`).
///
/// Index 0 is the vacuum and indices `1..=L` are the single excitations in
/// site order; higher sectors follow in increasing excitation number,
/// lexicographic within a sector.
#[derive(Debug, Clone)]
pub struct BasisIndex {
    pub l: usize,
    pub truncation: Truncation,
    states: Vec<u32>,
    lookup: HashMap<u32, usize>,
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension of a truncated basis without building it.
pub fn dimension(l: usize, truncation: Truncation) -> usize {
    let m = match truncation {
        Truncation::Max(m) => m.min(l),
        Truncation::Full => l,
    };
    (0..=m).map(|k| binom(l, k)).sum()
}

fn combinations(l: usize, m: usize, out: &mut Vec<u32>) {
    fn rec(start: usize, l: usize, left: usize, acc: u32, out: &mut Vec<u32>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for s in start..=(l - left) {
            rec(s + 1, l, left - 1, acc | (1 << s), out);
        }
    }
    rec(0, l, m, 0, out);
}

impl BasisIndex {
    pub fn new(l: usize, truncation: Truncation) -> Self {
        assert!(l >= 1 && l <= MAX_SITES, "chain length {l} outside 1..={MAX_SITES}");
        let m = match truncation {
            Truncation::Max(m) => m.min(l),
            Truncation::Full => l,
        };
        let mut states = Vec::with_capacity(dimension(l, truncation));
        for k in 0..=m {
            combinations(l, k, &mut states);
        }
        let lookup = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Self { l, truncation, states, lookup }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn m_max(&self) -> usize {
        match self.truncation {
            Truncation::Max(m) => m.min(self.l),
            Truncation::Full => self.l,
        }
    }

    pub fn state(&self, i: usize) -> u32 {
        self.states[i]
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn index_of(&self, mask: u32) -> Option<usize> {
        self.lookup.get(&mask).copied()
    }

    pub fn excitations(&self, i: usize) -> usize {
        self.states[i].count_ones() as usize
    }

    /// Index of the single excitation on site `site` (1-based).
    pub fn single(&self, site: usize) -> usize {
        assert!(site >= 1 && site <= self.l);
        site
    }

    /// Mirror image `l -> L + 1 - l` of every basis state, as an index permutation.
    pub fn mirror(&self) -> Vec<usize> {
        let shift = 32 - self.l as u32;
        self.states.iter().map(|s| self.lookup[&(s.reverse_bits() >> shift)]).collect()
    }
}
