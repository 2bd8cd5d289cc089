//! Linear forms over unknown coefficients `x_j(l)`.
//!
//! Write `X(l) = ν₀(ε^l R⁻_l) = Σ_j x_j(l) N^{-j}`, with `X(∅) = 1` and
//! `X(l) = 0` for odd `l`. Expanding `R⁻ = R - εε'/N`, applying the Taylor
//! formula in `t` to `ν₀(ε^l R_l)`, and using `ν(ε^l R_l) = ν(ε^l̂ R_l̂)`
//! (site symmetry, `l` even) gives the exact identity
//!
//! ```text
//! X(l) = Σ_{T ⊆ [ℓ-1]} N^{-(ℓ-1-|T|)} X(l̂_T) - Σ_{T ⊊ [ℓ]} N^{-(ℓ-|T|)} X(l_T)
//!        + Tay(l̂) - Tay(l)
//! Tay(a) = Σ_{r≥1} β^{2r}/r! Σ_{η ∈ C_r(n)} ρ(η) Σ_{T ⊆ [|a|]} N^{-(|a|-|T|)} X(a_T η)
//! ```
//!
//! where `n` is the replica count of `l`. Taking the `N^{-j}` coefficient and
//! using `x_j(l) = 0` whenever `2j < ℓ` leaves finitely many terms. The only
//! term at the same `(ℓ, j)` is `β² x_j(l)` itself (from `Tay(l̂)`, `r = 1`);
//! every other term has a smaller `j` or a longer sequence.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::budget::{BudgetExceeded, WorkBudget};
use crate::sequences::{canonical_pairs, enumerate_c_sets, IndexSequence, Pair, SequenceError};
use crate::QPoly;

/// Memo key: canonical even sequence and coefficient index.
pub type CoeffKey = (IndexSequence, u32);

#[derive(Debug, Default)]
pub struct WorkCounters {
    pub enumerated: AtomicU64,
    pub survivors: AtomicU64,
}

impl WorkCounters {
    pub fn snapshot(&self) -> (u64, u64) {
        (
            self.enumerated.load(Ordering::Relaxed),
            self.survivors.load(Ordering::Relaxed),
        )
    }
}

/// `x_j(l) = (constant + Σ coeff·x_{j'}(l')) / (1 - self_coeff)`.
#[derive(Debug, Clone)]
pub struct LinearForm {
    pub constant: QPoly,
    pub self_coeff: QPoly,
    pub terms: Vec<(CoeffKey, QPoly)>,
}

impl LinearForm {
    pub fn dependencies(&self) -> impl Iterator<Item = &CoeffKey> {
        self.terms.iter().map(|(k, _)| k)
    }
}

/// Accumulates integer weights per (key, power of x); the weight of power `r`
/// is divided by `r!` when the form is finished.
#[derive(Default)]
pub(crate) struct FormBuilder {
    constant: Vec<BigInt>,
    terms: HashMap<CoeffKey, Vec<BigInt>>,
}

fn bump(slot: &mut Vec<BigInt>, power: usize, weight: &BigInt) {
    if slot.len() <= power {
        slot.resize(power + 1, BigInt::zero());
    }
    slot[power] += weight;
}

fn factorial(r: usize) -> BigInt {
    (1..=r).fold(BigInt::one(), |acc, k| acc * k)
}

fn to_poly(weights: Vec<BigInt>) -> QPoly {
    QPoly::new(
        weights
            .into_iter()
            .enumerate()
            .map(|(r, w)| BigRational::new(w, factorial(r)))
            .collect(),
    )
}

impl FormBuilder {
    /// Adds `weight·x^power/power! · X(pairs, j)` after applying the
    /// vanishing rules (odd parity, `2j < len`).
    pub(crate) fn add(&mut self, pairs: &[Pair], j: u32, power: usize, weight: &BigInt) -> bool {
        if pairs.is_empty() {
            if j == 0 {
                bump(&mut self.constant, power, weight);
                return true;
            }
            return false;
        }
        if j == 0 || 2 * (j as usize) < pairs.len() {
            return false;
        }
        if pairs.iter().fold(0u128, |m, p| m ^ p.mask()) != 0 {
            return false;
        }
        let key = (canonical_pairs(pairs), j);
        bump(self.terms.entry(key).or_default(), power, weight);
        true
    }

    pub(crate) fn finish(self, own: &CoeffKey) -> LinearForm {
        let mut self_coeff = QPoly::zero();
        let mut terms: Vec<(CoeffKey, QPoly)> = Vec::with_capacity(self.terms.len());
        for (key, weights) in self.terms {
            let poly = to_poly(weights);
            if poly.is_zero() {
                continue;
            }
            if &key == own {
                self_coeff = poly;
            } else {
                terms.push((key, poly));
            }
        }
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        LinearForm {
            constant: to_poly(self.constant),
            self_coeff,
            terms,
        }
    }
}

/// Position subsets of a sequence, with the data the Taylor terms need.
struct Subset {
    pairs: Vec<Pair>,
    mask: u128,
    j: u32,
    r_max: usize,
}

fn subsets(a: &IndexSequence, j: u32) -> Vec<Subset> {
    let len = a.len();
    let mut out = Vec::new();
    for bits in 0u32..(1 << len) {
        let size = bits.count_ones() as usize;
        let shift = (len - size) as u32;
        if j <= shift {
            continue;
        }
        let jj = j - shift;
        let r_max = (2 * jj as usize).saturating_sub(size);
        if r_max == 0 {
            continue;
        }
        let pairs: Vec<Pair> = (0..len)
            .filter(|i| bits & (1 << i) != 0)
            .map(|i| a.pairs()[i])
            .collect();
        let mask = pairs.iter().fold(0, |m, p| m ^ p.mask());
        out.push(Subset {
            pairs,
            mask,
            j: jj,
            r_max,
        });
    }
    out
}

/// `sign · Tay(a)` restricted to the `N^{-j}` coefficient.
fn add_taylor(
    form: &mut FormBuilder,
    a: &IndexSequence,
    n: u32,
    j: u32,
    sign: i32,
    budget: &WorkBudget,
    counters: &WorkCounters,
) -> Result<(), BudgetExceeded> {
    let subs = subsets(a, j);
    let r_top = subs.iter().map(|s| s.r_max).max().unwrap_or(0);
    let mut composite: Vec<Pair> = Vec::new();
    for r in 1..=r_top {
        let iter = enumerate_c_sets(r, n, budget).map_err(expect_overflow)?;
        for item in iter {
            let item = item.map_err(expect_overflow)?;
            counters.enumerated.fetch_add(1, Ordering::Relaxed);
            let mask = item.seq.odd_mask();
            let weight = if sign < 0 { -item.rho.0 } else { item.rho.0 };
            for s in subs.iter().filter(|s| s.r_max >= r && s.mask == mask) {
                composite.clear();
                composite.extend_from_slice(&s.pairs);
                composite.extend_from_slice(item.seq.pairs());
                if form.add(&composite, s.j, r, &weight) {
                    counters.survivors.fetch_add(1, Ordering::Relaxed);
                }
            }
        }
    }
    Ok(())
}

fn expect_overflow(e: SequenceError) -> BudgetExceeded {
    match e {
        SequenceError::Overflow(b) => b,
        other => unreachable!("engine enumerations use valid parameters: {other}"),
    }
}

/// Builds the linear form for `x_j(l)`; `l` must be canonical and even.
pub(crate) fn build_form(
    key: &CoeffKey,
    budget: &WorkBudget,
    counters: &WorkCounters,
) -> Result<LinearForm, BudgetExceeded> {
    let (l, j) = (&key.0, key.1);
    let len = l.len();
    let hat = l.without_last();
    let n = l.replica_count();
    let mut form = FormBuilder::default();
    let plus = BigInt::one();
    let minus = -BigInt::one();

    for bits in 0u32..(1 << (len - 1)) {
        let size = bits.count_ones();
        let shift = (len - 1) as u32 - size;
        if j >= shift {
            let sel: Vec<usize> = (0..len - 1).filter(|i| bits & (1 << i) != 0).collect();
            form.add(hat.select(&sel).pairs(), j - shift, 0, &plus);
        }
    }
    for bits in 0u32..((1 << len) - 1) {
        let size = bits.count_ones();
        let shift = len as u32 - size;
        if j >= shift {
            let sel: Vec<usize> = (0..len).filter(|i| bits & (1 << i) != 0).collect();
            form.add(l.select(&sel).pairs(), j - shift, 0, &minus);
        }
    }
    add_taylor(&mut form, &hat, n, j, 1, budget, counters)?;
    add_taylor(&mut form, l, n, j, -1, budget, counters)?;
    Ok(form.finish(key))
}

/// `c_j = Σ_{ℓ=1}^{2j-1} β^{2ℓ}/ℓ! Σ_{η ∈ C_ℓ(2)} ρ(η) x_j((1,2) η)` as a form
/// with no self term.
pub(crate) fn build_assembly(
    j: u32,
    budget: &WorkBudget,
    counters: &WorkCounters,
) -> Result<LinearForm, BudgetExceeded> {
    let head = Pair::sorted(1, 2);
    let mut form = FormBuilder::default();
    let mut composite = Vec::new();
    for ell in 1..(2 * j as usize) {
        let iter = enumerate_c_sets(ell, 2, budget).map_err(expect_overflow)?;
        for item in iter {
            let item = item.map_err(expect_overflow)?;
            counters.enumerated.fetch_add(1, Ordering::Relaxed);
            if item.seq.odd_mask() != head.mask() {
                continue;
            }
            composite.clear();
            composite.push(head);
            composite.extend_from_slice(item.seq.pairs());
            if form.add(&composite, j, ell, &item.rho.0) {
                counters.survivors.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
    let nobody = (IndexSequence::empty(), u32::MAX);
    Ok(form.finish(&nobody))
}
