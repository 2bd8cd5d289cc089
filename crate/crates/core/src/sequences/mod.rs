//! Replica-pair index sequences and the combinatorics built on them.
//!
//! A sequence `l = (l1,l1',...,lℓ,lℓ')` stands for the monomial
//! `ε^l R⁻_l = Π ε_{li} ε_{li'} R⁻_{li,li'}` in the replica spins. Its parity
//! decides whether the cavity average at `t = 0` can be nonzero, and its
//! canonical relabeling is the memoization key of the coefficient engine.

mod csets;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;

pub use csets::{
    count_c_sequences, dump_line, enumerate_c_sets, path_size, rho, Branch, BranchPath, CSequence,
    CSetIter, ReplicaCount, RhoValue,
};

/// Largest replica index a sequence may carry (parity masks are `u128`).
pub const MAX_REPLICA: u8 = 127;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SequenceError {
    #[error("index sequence must contain at least one pair")]
    Empty,
    #[error("pair ({0},{1}) violates 1 <= l < l' <= {MAX_REPLICA}")]
    BadPair(u32, u32),
    #[error("subsequence size {u} outside 1..={len}")]
    SubsetSize { u: usize, len: usize },
    #[error("invalid enumeration parameters: {0}")]
    InvalidParameters(String),
    #[error("cannot parse index sequence from {0:?}")]
    Parse(String),
    #[error(transparent)]
    Overflow(#[from] crate::budget::BudgetExceeded),
}

/// One replica pair `(lo, hi)` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    lo: u8,
    hi: u8,
}

impl Pair {
    pub fn new(a: u32, b: u32) -> Result<Self, SequenceError> {
        if a == 0 || a >= b || b > MAX_REPLICA as u32 {
            return Err(SequenceError::BadPair(a, b));
        }
        Ok(Self {
            lo: a as u8,
            hi: b as u8,
        })
    }

    /// Orders the two indices; used after relabeling.
    pub(crate) fn sorted(a: u8, b: u8) -> Self {
        debug_assert!(a != b && a > 0 && b > 0);
        Self {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn lo(self) -> u8 {
        self.lo
    }

    pub fn hi(self) -> u8 {
        self.hi
    }

    pub(crate) fn mask(self) -> u128 {
        (1u128 << (self.lo - 1)) ^ (1u128 << (self.hi - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn from_mask(mask: u128) -> Parity {
        if mask == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// An ordered list of replica pairs.
///
/// Public constructors reject the empty sequence; the empty value exists only
/// inside the crate, where it stands for the constant monomial `1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSequence {
    pairs: Vec<Pair>,
}

impl IndexSequence {
    pub fn new(pairs: Vec<Pair>) -> Result<Self, SequenceError> {
        if pairs.is_empty() {
            return Err(SequenceError::Empty);
        }
        Ok(Self { pairs })
    }

    pub fn from_tuples(pairs: &[(u32, u32)]) -> Result<Self, SequenceError> {
        let pairs = pairs
            .iter()
            .map(|&(a, b)| Pair::new(a, b))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(pairs)
    }

    pub(crate) fn from_pairs_unchecked(pairs: Vec<Pair>) -> Self {
        Self { pairs }
    }

    pub(crate) fn empty() -> Self {
        Self { pairs: Vec::new() }
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Largest replica index used; `0` for the empty sequence.
    pub fn replica_count(&self) -> u32 {
        self.pairs.iter().map(|p| p.hi as u32).max().unwrap_or(0)
    }

    /// Bit `i - 1` is set iff replica `i` occurs an odd number of times.
    pub fn odd_mask(&self) -> u128 {
        self.pairs.iter().fold(0, |m, p| m ^ p.mask())
    }

    /// Even iff every replica index occurs an even number of times, i.e.
    /// iff `ε^l ≡ 1`.
    pub fn parity(&self) -> Parity {
        Parity::from_mask(self.odd_mask())
    }

    /// The sequence without its last pair.
    pub fn without_last(&self) -> IndexSequence {
        let mut pairs = self.pairs.clone();
        pairs.pop();
        Self { pairs }
    }

    pub fn concat(&self, other: &IndexSequence) -> IndexSequence {
        let mut pairs = Vec::with_capacity(self.len() + other.len());
        pairs.extend_from_slice(&self.pairs);
        pairs.extend_from_slice(&other.pairs);
        Self { pairs }
    }

    /// The pairs at the given positions, in position order.
    pub fn select(&self, positions: &[usize]) -> IndexSequence {
        Self {
            pairs: positions.iter().map(|&i| self.pairs[i]).collect(),
        }
    }

    /// Relabels replicas by order of first appearance and re-sorts each pair.
    pub fn canonicalize(&self) -> IndexSequence {
        canonical_pairs(&self.pairs)
    }

    pub fn is_canonical(&self) -> bool {
        let mut next = 1u8;
        for p in &self.pairs {
            for v in [p.lo, p.hi] {
                if v == next {
                    next += 1;
                } else if v > next {
                    return false;
                }
            }
        }
        true
    }

    /// All `C(ℓ, u)` subsequences picking `u` distinct positions.
    ///
    /// Positions, not values, are chosen: a sequence with a repeated pair
    /// yields equal subsequences once per selection.
    pub fn subsequence_family(&self, u: usize) -> Result<Vec<IndexSequence>, SequenceError> {
        if u == 0 || u > self.len() {
            return Err(SequenceError::SubsetSize { u, len: self.len() });
        }
        Ok((0..self.len())
            .combinations(u)
            .map(|pos| self.select(&pos))
            .collect())
    }
}

pub(crate) fn canonical_pairs(pairs: &[Pair]) -> IndexSequence {
    let mut relabel = [0u8; MAX_REPLICA as usize + 1];
    let mut next = 1u8;
    let mut out = Vec::with_capacity(pairs.len());
    for p in pairs {
        let mut map = |v: u8| {
            let slot = &mut relabel[v as usize];
            if *slot == 0 {
                *slot = next;
                next += 1;
            }
            *slot
        };
        let a = map(p.lo);
        let b = map(p.hi);
        out.push(Pair::sorted(a, b));
    }
    IndexSequence { pairs: out }
}

/// Free-function form of [`IndexSequence::parity`].
pub fn parity(l: &IndexSequence) -> Parity {
    l.parity()
}

/// Free-function form of [`IndexSequence::canonicalize`].
pub fn canonicalize(l: &IndexSequence) -> IndexSequence {
    l.canonicalize()
}

/// Free-function form of [`IndexSequence::subsequence_family`].
pub fn subsequence_family(l: &IndexSequence, u: usize) -> Result<Vec<IndexSequence>, SequenceError> {
    l.subsequence_family(u)
}

/// Occurrence count of every replica index.
pub fn occurrences(l: &IndexSequence) -> HashMap<u8, usize> {
    l.pairs
        .iter()
        .flat_map(|p| [p.lo, p.hi])
        .counts()
}

impl fmt::Display for IndexSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pairs.is_empty() {
            return f.write_str("()");
        }
        for p in &self.pairs {
            write!(f, "({},{})", p.lo, p.hi)?;
        }
        Ok(())
    }
}

impl fmt::Debug for IndexSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexSequence{self}")
    }
}

/// Parses `(1,2)(1,3)`; whitespace is ignored.
impl FromStr for IndexSequence {
    type Err = SequenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SequenceError::Parse(s.to_owned());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let body = compact
            .strip_prefix('(')
            .and_then(|b| b.strip_suffix(')'))
            .ok_or_else(bad)?;
        let mut tuples = Vec::new();
        for chunk in body.split(")(") {
            let (a, b) = chunk.split_once(',').ok_or_else(bad)?;
            tuples.push((
                a.parse().map_err(|_| bad())?,
                b.parse().map_err(|_| bad())?,
            ));
        }
        Self::from_tuples(&tuples)
    }
}
