//! The sets `C^f_{ℓ,m}` produced by ℓ-fold differentiation of `ν_t(f)`.
//!
//! Each derivative step appends one replica pair to the running sequence in
//! one of three ways, given the current replica count `M`:
//!
//! * `KEEP`: any pair `(a, b)` with `1 <= a < b <= M`, factor `1`;
//! * `ADD1`: `(a, M+1)` for `1 <= a <= M`, factor `-M`, count becomes `M+1`;
//! * `ADD2`: `(M+1, M+2)`, factor `M(M+1)/2`, count becomes `M+2`.
//!
//! A branch path of length ℓ identifies one of the `3^ℓ` sets. Its index
//! `m` is `1 +` the base-3 number whose most significant digit is the first
//! step (`KEEP = 0`, `ADD1 = 1`, `ADD2 = 2`).

use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use super::{IndexSequence, Pair, SequenceError, MAX_REPLICA};
use crate::budget::WorkBudget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Keep,
    Add1,
    Add2,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Keep, Branch::Add1, Branch::Add2];

    pub fn tag(self) -> &'static str {
        match self {
            Branch::Keep => "KEEP",
            Branch::Add1 => "ADD1",
            Branch::Add2 => "ADD2",
        }
    }

    fn digit(self) -> u64 {
        match self {
            Branch::Keep => 0,
            Branch::Add1 => 1,
            Branch::Add2 => 2,
        }
    }

    /// Replicas introduced by this step.
    pub fn growth(self) -> u32 {
        self.digit() as u32
    }

    /// Number of pairs this step can append at replica count `m`.
    pub fn choices(self, m: u32) -> u64 {
        let m = m as u64;
        match self {
            Branch::Keep => m * m.saturating_sub(1) / 2,
            Branch::Add1 => m,
            Branch::Add2 => 1,
        }
    }

    /// Multiplicative contribution to `ρ` at replica count `m`.
    pub fn rho_factor(self, m: u32) -> BigInt {
        let m = BigInt::from(m);
        match self {
            Branch::Keep => BigInt::one(),
            Branch::Add1 => -m,
            Branch::Add2 => &m * (&m + 1u32) / 2u32,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BranchPath {
    steps: Vec<Branch>,
}

impl BranchPath {
    pub fn new(steps: Vec<Branch>) -> Self {
        Self { steps }
    }

    /// The path of set `C_{ℓ,m}`, `1 <= m <= 3^ℓ`.
    pub fn from_index(ell: usize, m: u64) -> Result<Self, SequenceError> {
        let total = 3u64
            .checked_pow(ell as u32)
            .ok_or_else(|| SequenceError::InvalidParameters(format!("3^{ell} overflows")))?;
        if ell == 0 || m == 0 || m > total {
            return Err(SequenceError::InvalidParameters(format!(
                "m = {m} outside 1..={total}"
            )));
        }
        let mut rest = m - 1;
        let mut steps = vec![Branch::Keep; ell];
        for slot in steps.iter_mut().rev() {
            *slot = Branch::ALL[(rest % 3) as usize];
            rest /= 3;
        }
        Ok(Self { steps })
    }

    pub fn index(&self) -> u64 {
        1 + self.steps.iter().fold(0, |acc, b| acc * 3 + b.digit())
    }

    pub fn steps(&self) -> &[Branch] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn count_of(&self, branch: Branch) -> usize {
        self.steps.iter().filter(|&&b| b == branch).count()
    }

    /// Replica count after the whole path, starting from `n`.
    pub fn final_count(&self, n: u32) -> ReplicaCount {
        ReplicaCount(n + self.steps.iter().map(|b| b.growth()).sum::<u32>())
    }

    /// Replica count before each step, starting from `n`.
    pub fn counts_before(&self, n: u32) -> Vec<u32> {
        let mut m = n;
        self.steps
            .iter()
            .map(|b| {
                let before = m;
                m += b.growth();
                before
            })
            .collect()
    }
}

impl fmt::Display for BranchPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tags: Vec<&str> = self.steps.iter().map(|b| b.tag()).collect();
        f.write_str(&tags.join(","))
    }
}

/// `M^f_{ℓ,m}`: number of replicas the derived monomial depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReplicaCount(pub u32);

/// `ρ^f(l)`, the signed integer weight of a sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RhoValue(pub BigInt);

impl fmt::Display for RhoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `ρ` of every sequence on `path`, for a function of `n` replicas.
pub fn rho(path: &BranchPath, n: u32) -> RhoValue {
    let mut acc = BigInt::one();
    for (b, m) in path.steps.iter().zip(path.counts_before(n)) {
        acc *= b.rho_factor(m);
    }
    RhoValue(acc)
}

/// `|C_{ℓ,m}|` for the set identified by `path`.
pub fn path_size(path: &BranchPath, n: u32) -> BigUint {
    path.steps
        .iter()
        .zip(path.counts_before(n))
        .map(|(b, m)| BigUint::from(b.choices(m)))
        .product()
}

/// `Σ_m |C_{ℓ,m}|` without enumerating (dry-run counting mode).
pub fn count_c_sequences(ell: usize, n: u32) -> BigUint {
    fn go(rest: usize, m: u32, memo: &mut HashMap<(usize, u32), BigUint>) -> BigUint {
        if rest == 0 {
            return BigUint::one();
        }
        if let Some(v) = memo.get(&(rest, m)) {
            return v.clone();
        }
        let mut total = BigUint::zero();
        for b in Branch::ALL {
            let k = b.choices(m);
            if k > 0 {
                total += BigUint::from(k) * go(rest - 1, m + b.growth(), memo);
            }
        }
        memo.insert((rest, m), total.clone());
        total
    }
    go(ell, n, &mut HashMap::new())
}

/// One element of some `C_{ℓ,m}` with its bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CSequence {
    pub path: BranchPath,
    pub seq: IndexSequence,
    pub count: ReplicaCount,
    pub rho: RhoValue,
}

/// `path=<tags> seq=(a,b)... M=<int> rho=<int> parity=<even|odd>`
pub fn dump_line(item: &CSequence) -> String {
    format!(
        "path={} seq={} M={} rho={} parity={}",
        item.path,
        item.seq,
        item.count.0,
        item.rho,
        item.seq.parity()
    )
}

struct Frame {
    m_before: u32,
    idx: usize,
}

/// Lazy depth-first stream over `∪_m C_{ℓ,m}`.
///
/// Items come out ordered by `m`, then lexicographically by pairs. Every item
/// is charged to the budget; once it is exhausted the stream yields a single
/// overflow error and stops.
pub struct CSetIter<'a> {
    ell: usize,
    stack: Vec<Frame>,
    candidates: Vec<Vec<(Branch, Pair)>>,
    budget: &'a WorkBudget,
    done: bool,
}

impl<'a> CSetIter<'a> {
    fn candidates_for(&mut self, m: u32) -> &[(Branch, Pair)] {
        let m_idx = m as usize;
        if self.candidates.len() <= m_idx {
            self.candidates.resize_with(m_idx + 1, Vec::new);
        }
        if self.candidates[m_idx].is_empty() {
            let m8 = m as u8;
            let mut list = Vec::new();
            for a in 1..=m8 {
                for b in a + 1..=m8 {
                    list.push((Branch::Keep, Pair::sorted(a, b)));
                }
            }
            for a in 1..=m8 {
                list.push((Branch::Add1, Pair::sorted(a, m8 + 1)));
            }
            list.push((Branch::Add2, Pair::sorted(m8 + 1, m8 + 2)));
            self.candidates[m_idx] = list;
        }
        &self.candidates[m_idx]
    }

    fn current(&mut self) -> CSequence {
        let mut steps = Vec::with_capacity(self.ell);
        let mut pairs = Vec::with_capacity(self.ell);
        let mut rho = BigInt::one();
        let mut last = 0;
        let frames: Vec<(u32, usize)> = self.stack.iter().map(|f| (f.m_before, f.idx)).collect();
        for (m, idx) in frames {
            let (b, p) = self.candidates_for(m)[idx];
            steps.push(b);
            pairs.push(p);
            rho *= b.rho_factor(m);
            last = m + b.growth();
        }
        CSequence {
            path: BranchPath { steps },
            seq: IndexSequence::from_pairs_unchecked(pairs),
            count: ReplicaCount(last),
            rho: RhoValue(rho),
        }
    }

    fn descend(&mut self) {
        while self.stack.len() < self.ell {
            let (m_before, idx) = match self.stack.last() {
                None => unreachable!("stack is seeded with the first level"),
                Some(f) => (f.m_before, f.idx),
            };
            let (b, _) = self.candidates_for(m_before)[idx];
            let m = m_before + b.growth();
            self.stack.push(Frame { m_before: m, idx: 0 });
        }
    }

    fn advance(&mut self) {
        while let Some(top) = self.stack.last_mut() {
            top.idx += 1;
            let (m, idx) = (top.m_before, top.idx);
            if idx < self.candidates_for(m).len() {
                return;
            }
            self.stack.pop();
        }
        self.done = true;
    }
}

impl Iterator for CSetIter<'_> {
    type Item = Result<CSequence, SequenceError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        self.descend();
        let item = self.current();
        self.advance();
        if let Err(e) = self.budget.charge(1) {
            self.done = true;
            return Some(Err(e.into()));
        }
        Some(Ok(item))
    }
}

/// Streams every sequence of every `C_{ℓ,m}` for a function of `n` replicas.
pub fn enumerate_c_sets(
    ell: usize,
    n: u32,
    budget: &WorkBudget,
) -> Result<CSetIter<'_>, SequenceError> {
    if ell == 0 || n == 0 {
        return Err(SequenceError::InvalidParameters(format!(
            "need ℓ >= 1 and n >= 1, got ℓ = {ell}, n = {n}"
        )));
    }
    if n as usize + 2 * ell > MAX_REPLICA as usize {
        return Err(SequenceError::InvalidParameters(format!(
            "replica indices would exceed {MAX_REPLICA}"
        )));
    }
    Ok(CSetIter {
        ell,
        stack: vec![Frame { m_before: n, idx: 0 }],
        candidates: Vec::new(),
        budget,
        done: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(ell: usize, n: u32) -> Vec<CSequence> {
        let budget = WorkBudget::unlimited();
        enumerate_c_sets(ell, n, &budget)
            .unwrap()
            .map(Result::unwrap)
            .collect()
    }

    #[test]
    fn level_one_sets_for_two_replicas() {
        let items = collect(1, 2);
        let by_m: Vec<(u64, String, u32)> = items
            .iter()
            .map(|c| (c.path.index(), c.seq.to_string(), c.count.0))
            .collect();
        assert_eq!(
            by_m,
            vec![
                (1, "(1,2)".into(), 2),
                (2, "(1,3)".into(), 3),
                (2, "(2,3)".into(), 3),
                (3, "(3,4)".into(), 4),
            ]
        );
    }

    #[test]
    fn level_two_total_matches_counting() {
        assert_eq!(collect(2, 2).len(), 29);
        assert_eq!(count_c_sequences(2, 2), BigUint::from(29u32));
        for (ell, n) in [(1, 1), (3, 2), (3, 4), (4, 1)] {
            assert_eq!(
                BigUint::from(collect(ell, n).len()),
                count_c_sequences(ell, n),
                "ℓ={ell} n={n}"
            );
        }
    }

    #[test]
    fn rho_examples() {
        let p = |steps: &[Branch]| BranchPath::new(steps.to_vec());
        assert_eq!(rho(&p(&[Branch::Keep]), 2).0, BigInt::from(1));
        assert_eq!(rho(&p(&[Branch::Add1]), 2).0, BigInt::from(-2));
        assert_eq!(rho(&p(&[Branch::Add2]), 2).0, BigInt::from(3));
        assert_eq!(rho(&p(&[Branch::Add2, Branch::Add2]), 2).0, BigInt::from(30));
    }

    #[test]
    fn index_encoding_is_bijective() {
        for ell in 1..=4 {
            for m in 1..=3u64.pow(ell as u32) {
                let path = BranchPath::from_index(ell, m).unwrap();
                assert_eq!(path.index(), m);
            }
        }
        // the last step is the least significant digit
        let path = BranchPath::from_index(2, 2).unwrap();
        assert_eq!(path.steps(), &[Branch::Keep, Branch::Add1]);
        assert!(BranchPath::from_index(1, 4).is_err());
        assert!(BranchPath::from_index(1, 0).is_err());
    }

    #[test]
    fn budget_overflow_is_reported_once() {
        let budget = WorkBudget::new(2);
        let out: Vec<_> = enumerate_c_sets(1, 2, &budget).unwrap().collect();
        assert_eq!(out.len(), 3);
        assert!(out[0].is_ok() && out[1].is_ok());
        assert!(matches!(out[2], Err(SequenceError::Overflow(_))));
    }

    #[test]
    fn invalid_parameters() {
        let budget = WorkBudget::unlimited();
        assert!(enumerate_c_sets(0, 2, &budget).is_err());
        assert!(enumerate_c_sets(1, 0, &budget).is_err());
    }

    #[test]
    fn dump_format() {
        let items = collect(1, 2);
        assert_eq!(
            dump_line(&items[1]),
            "path=ADD1 seq=(1,3) M=3 rho=-2 parity=odd"
        );
    }
}
