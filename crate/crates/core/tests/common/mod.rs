//! Independent, non-memoized evaluator of the `N^{-j}` coefficient of
//! `X(l) = ν₀(ε^l R⁻_l)`.
//!
//! It follows a different route from the engine:
//!
//! ```text
//! X(l) = Σ_{T ⊆ [ℓ]} (-1/N)^{ℓ-|T|} Y(l_T),        Y(a) = ν₀(ε^a R_a)
//! Y(a) = Σ_{S ⊆ a} N^{-(|a|-|S|)} X(a_S)           for a ≠ l
//! Y(l) = Y(l̂) + Σ_r β^{2r}/r! [D_r(l̂) - D_r(l)]
//! D_r(a) = Σ_{η ∈ C_r(n(a))} ρ(η) Σ_{S ⊆ a} N^{-(|a|-|S|)} X(a_S η)
//! ```
//!
//! keeping the double subset sum unexpanded and differentiating each
//! function on its own replica count `n(a)`, as opposed to the engine's
//! collapsed single sum over the replica count of `l`.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use sk_overlap::budget::WorkBudget;
use sk_overlap::sequences::{enumerate_c_sets, IndexSequence, Pair};
use sk_overlap::{QPoly, QRatFn};

fn canonical(pairs: &[Pair]) -> Vec<Pair> {
    if pairs.is_empty() {
        return Vec::new();
    }
    IndexSequence::new(pairs.to_vec())
        .unwrap()
        .canonicalize()
        .pairs()
        .to_vec()
}

fn odd_replicas(pairs: &[Pair]) -> Vec<u8> {
    let mut count = [0u8; 128];
    for p in pairs {
        count[p.lo() as usize] ^= 1;
        count[p.hi() as usize] ^= 1;
    }
    (0..128u8).filter(|&i| count[i as usize] == 1).collect()
}

fn replicas(pairs: &[Pair]) -> u32 {
    pairs.iter().map(|p| p.hi() as u32).max().unwrap_or(0)
}

fn pick(pairs: &[Pair], mask: u32) -> Vec<Pair> {
    (0..pairs.len())
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| pairs[i])
        .collect()
}

fn monomial(coeff: BigRational, power: usize) -> QRatFn {
    QRatFn::from_poly(QPoly::monomial(coeff, power))
}

fn factorial(r: usize) -> BigInt {
    (1..=r).fold(BigInt::one(), |a, k| a * k)
}

/// Coefficient of `N^{-j}` in `X(l)`.
pub fn direct_coefficient(l: &[Pair], j: i64) -> QRatFn {
    if j < 0 {
        return QRatFn::zero();
    }
    if l.is_empty() {
        return if j == 0 { QRatFn::one() } else { QRatFn::zero() };
    }
    if !odd_replicas(l).is_empty() || j == 0 || 2 * j < l.len() as i64 {
        return QRatFn::zero();
    }
    let l = canonical(l);
    let len = l.len();
    let hat = &l[..len - 1];
    let mut rest = QRatFn::zero();
    let mut self_coeff = QRatFn::zero();

    // Y(l_T) for proper T, each expanded over S ⊆ T
    for t in 0u32..(1 << len) - 1 {
        let lt = pick(&l, t);
        let sign = if (len - lt.len()) % 2 == 0 { 1 } else { -1 };
        for s in 0u32..(1 << lt.len()) {
            let ls = pick(&lt, s);
            let shift = (len - ls.len()) as i64;
            let x = direct_coefficient(&ls, j - shift);
            rest = if sign > 0 { &rest + &x } else { &rest - &x };
        }
    }
    // Y(l̂)
    for s in 0u32..(1 << hat.len()) {
        let hs = pick(hat, s);
        let shift = (hat.len() - hs.len()) as i64;
        rest = &rest + &direct_coefficient(&hs, j - shift);
    }
    // Taylor terms, each on its own replica count
    for (a, sign) in [(hat.to_vec(), 1i64), (l.clone(), -1i64)] {
        let n = replicas(&a);
        // 2j' >= |a_S η| bounds r by 2j - |a|
        let r_max = (2 * j) as usize - a.len().min(2 * j as usize);
        for r in 1..=r_max {
            let budget = WorkBudget::unlimited();
            for item in enumerate_c_sets(r, n, &budget).unwrap() {
                let item = item.unwrap();
                for s in 0u32..(1 << a.len()) {
                    let mut comp = pick(&a, s);
                    let jj = j - (a.len() - comp.len()) as i64;
                    comp.extend_from_slice(item.seq.pairs());
                    if jj <= 0 || 2 * jj < comp.len() as i64 || !odd_replicas(&comp).is_empty() {
                        continue;
                    }
                    let weight = BigRational::new(item.rho.0.clone() * sign, factorial(r));
                    let term = monomial(weight, r);
                    if jj == j && canonical(&comp) == l {
                        self_coeff = &self_coeff + &term;
                    } else {
                        rest = &rest + &(&term * &direct_coefficient(&comp, jj));
                    }
                }
            }
        }
    }
    rest.checked_div(&(&QRatFn::one() - &self_coeff)).unwrap()
}

/// All canonical even sequences of length `len`.
pub fn canonical_even_sequences(len: usize) -> Vec<IndexSequence> {
    fn grow(prefix: &mut Vec<Pair>, len: usize, out: &mut Vec<IndexSequence>) {
        if prefix.len() == len {
            let s = IndexSequence::new(prefix.clone()).unwrap();
            if s.is_canonical() && s.parity() == sk_overlap::sequences::Parity::Even {
                out.push(s);
            }
            return;
        }
        let top = replicas(prefix) + 2;
        for a in 1..top {
            for b in a + 1..=top {
                prefix.push(Pair::new(a, b).unwrap());
                grow(prefix, len, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), len, &mut out);
    out
}

pub fn rf(num: &[i64], den: &[i64]) -> QRatFn {
    QRatFn::new(QPoly::from_i64s(num), QPoly::from_i64s(den)).unwrap()
}

pub fn is_zero_at_origin(c: &QRatFn) -> bool {
    c.eval(&BigRational::zero()).unwrap().is_zero()
}
