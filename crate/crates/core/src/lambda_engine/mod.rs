//! Coefficients `λ_j^l` of `ν₀(ε^l R⁻_l) = Σ_j λ_j^l / N^j` and the assembled
//! expansion `ν(R²₁₂) = 1/N + Σ_j c_j(β) / N^j`.
//!
//! Work proceeds in two phases. Discovery builds the linear form of every
//! coefficient reachable from the request (see [`form`]); this is where all
//! the enumeration happens and it runs in parallel, since a form depends only
//! on its key. Evaluation then walks the keys in dependency order (`j`
//! ascending, sequence length descending), so every referenced coefficient is
//! known before it is needed. All arithmetic is exact, which makes results
//! independent of the worker count.

mod form;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;

use crate::budget::{BudgetExceeded, WorkBudget};
use crate::rational_algebra::AlgebraError;
use crate::sequences::{IndexSequence, Parity};
use crate::{QPoly, QRatFn};

pub use form::{CoeffKey, LinearForm};
use form::{build_assembly, build_form, WorkCounters};

/// Default cap on visited sequences: enough for `k₀ = 3`, not for `k₀ = 4`.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error(transparent)]
    Overflow(#[from] BudgetExceeded),
    #[error("{cause} while computing c_{failed_at} ({} coefficients completed)", completed.len())]
    PartialExpansion {
        completed: Vec<QRatFn>,
        failed_at: u32,
        cause: BudgetExceeded,
    },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("out of domain: {0}")]
    OutOfDomain(String),
}

/// Identifies `λ_j^l` inside the expansion truncated at order `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LambdaKey {
    seq: IndexSequence,
    j: u32,
    k: u32,
}

impl LambdaKey {
    /// Canonicalizes `seq`; rejects odd sequences, `ℓ > 2k` and `j > k`.
    pub fn new(seq: &IndexSequence, j: u32, k: u32) -> Result<Self, EngineError> {
        if seq.parity() == Parity::Odd {
            return Err(EngineError::ContractViolation(format!(
                "{seq} has odd parity; its cavity average vanishes identically"
            )));
        }
        if k == 0 || seq.len() > 2 * k as usize {
            return Err(EngineError::ContractViolation(format!(
                "sequence length {} exceeds 2k = {}",
                seq.len(),
                2 * k
            )));
        }
        if j > k {
            return Err(EngineError::ContractViolation(format!(
                "coefficient index {j} above truncation order {k}"
            )));
        }
        Ok(Self {
            seq: seq.canonicalize(),
            j,
            k,
        })
    }

    /// Like [`LambdaKey::new`] but also rejects non-canonical sequences.
    pub fn strict(seq: &IndexSequence, j: u32, k: u32) -> Result<Self, EngineError> {
        if !seq.is_canonical() {
            return Err(EngineError::ContractViolation(format!(
                "{seq} is not in canonical form"
            )));
        }
        Self::new(seq, j, k)
    }

    pub fn seq(&self) -> &IndexSequence {
        &self.seq
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn k(&self) -> u32 {
        self.k
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionStats {
    /// Sequences drawn from the `C`-set streams.
    pub enumerated: u64,
    /// Composite sequences that passed the parity filter.
    pub parity_survivors: u64,
    /// Distinct `(sequence, j)` coefficients evaluated.
    pub coefficients_evaluated: usize,
    pub wall_time: Duration,
}

/// `ν(R²₁₂) = leading/N + Σ_{j=1}^{k₀} c_j / N^j + O(N^{-k₀-1/2})`.
#[derive(Debug, Clone)]
pub struct ExpansionResult {
    pub order: u32,
    /// The exact `1/N` term, always `1`.
    pub leading: QRatFn,
    /// `c_1, ..., c_{k₀}`.
    pub coefficients: Vec<QRatFn>,
    pub stats: ExpansionStats,
}

impl ExpansionResult {
    /// `1/N + Σ c_j(x0)/N^j`, exactly.
    pub fn evaluate_exact(&self, x0: &BigRational, n: u32) -> Result<BigRational, EngineError> {
        let inv_n = BigRational::new(BigInt::one(), BigInt::from(n));
        let mut total = self.leading.eval(x0)? * inv_n.clone();
        let mut power = inv_n.clone();
        for c in &self.coefficients {
            total += c.eval(x0)? * power.clone();
            power *= inv_n.clone();
        }
        Ok(total)
    }

    /// Floating-point value at `β`, converted from the exact sum at the end.
    pub fn evaluate(&self, beta: f64, n: u32) -> Result<f64, EngineError> {
        let x0 = beta_squared(beta)?;
        if n == 0 {
            return Err(EngineError::OutOfDomain("N must be at least 1".into()));
        }
        Ok(ratio_to_f64(&self.evaluate_exact(&x0, n)?))
    }

    /// Indices `j` whose denominator is not a power of `(x - 1)`.
    pub fn pole_violations(&self) -> Vec<u32> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| c.pole_order_at_one().is_none())
            .map(|(i, _)| i as u32 + 1)
            .collect()
    }
}

/// Exact `β²` for `β` in `[0, 1)`.
pub fn beta_squared(beta: f64) -> Result<BigRational, EngineError> {
    if !(0.0..1.0).contains(&beta) {
        return Err(EngineError::OutOfDomain(format!(
            "β = {beta} is outside [0, 1)"
        )));
    }
    let b = BigRational::from_float(beta).expect("finite β");
    Ok(&b * &b)
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// `λ_1^l = 1/(1 - β²)` for every even sequence of length 2.
pub fn lambda_base() -> QRatFn {
    QRatFn::new(QPoly::one(), QPoly::from_i64s(&[1, -1])).expect("nonzero denominator")
}

/// Sums `poly · value` grouped by denominator so that gcd normalization runs
/// once per distinct denominator rather than once per term.
#[derive(Default)]
struct Accumulator {
    groups: HashMap<QPoly, QPoly>,
}

impl Accumulator {
    fn add(&mut self, coeff: &QPoly, value: &QRatFn) {
        if value.is_zero() || coeff.is_zero() {
            return;
        }
        let num = coeff * value.numerator();
        let slot = self
            .groups
            .entry(value.denominator().clone())
            .or_insert_with(QPoly::zero);
        *slot = &*slot + &num;
    }

    fn finish(self) -> QRatFn {
        let mut groups: Vec<(QPoly, QPoly)> = self.groups.into_iter().collect();
        groups.sort_by_key(|(d, _)| d.degree());
        groups.into_iter().fold(QRatFn::zero(), |acc, (den, num)| {
            let term = QRatFn::new(num, den).expect("stored denominators are nonzero");
            &acc + &term
        })
    }
}

/// Memoized evaluator of `λ_j^l` and `c_j`.
pub struct LambdaEngine {
    values: HashMap<CoeffKey, QRatFn>,
    budget: WorkBudget,
    counters: WorkCounters,
    pool: rayon::ThreadPool,
}

impl LambdaEngine {
    /// `workers = 0` uses one worker per available core.
    pub fn new(budget: u64, workers: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        Self {
            values: HashMap::new(),
            budget: WorkBudget::new(budget),
            counters: WorkCounters::default(),
            pool,
        }
    }

    pub fn budget(&self) -> &WorkBudget {
        &self.budget
    }

    pub fn memo_len(&self) -> usize {
        self.values.len()
    }

    fn trivial(key: &CoeffKey) -> Option<QRatFn> {
        let (seq, j) = key;
        if seq.is_empty() {
            return Some(if *j == 0 { QRatFn::one() } else { QRatFn::zero() });
        }
        if *j == 0 || seq.len() > 2 * *j as usize || seq.parity() == Parity::Odd {
            return Some(QRatFn::zero());
        }
        None
    }

    fn lookup(&self, key: &CoeffKey) -> QRatFn {
        Self::trivial(key).unwrap_or_else(|| {
            self.values
                .get(key)
                .cloned()
                .unwrap_or_else(|| panic!("coefficient {:?} evaluated out of order", key))
        })
    }

    fn evaluate_form(&self, form: &LinearForm) -> Result<QRatFn, EngineError> {
        let mut acc = Accumulator::default();
        acc.add(&form.constant, &QRatFn::one());
        for (key, coeff) in &form.terms {
            acc.add(coeff, &self.lookup(key));
        }
        let rhs = acc.finish();
        if form.self_coeff.is_zero() {
            return Ok(rhs);
        }
        let pivot = QRatFn::from_poly(&QPoly::one() - &form.self_coeff);
        Ok(rhs.checked_div(&pivot)?)
    }

    /// Discovers and evaluates every coefficient needed by `targets`.
    fn ensure(&mut self, targets: impl IntoIterator<Item = CoeffKey>) -> Result<(), EngineError> {
        let mut pending: HashMap<CoeffKey, LinearForm> = HashMap::new();
        let mut frontier: Vec<CoeffKey> = targets
            .into_iter()
            .filter(|k| Self::trivial(k).is_none() && !self.values.contains_key(k))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        while !frontier.is_empty() {
            let (budget, counters) = (&self.budget, &self.counters);
            let built: Vec<(CoeffKey, LinearForm)> = self.pool.install(|| {
                frontier
                    .par_iter()
                    .map(|key| build_form(key, budget, counters).map(|f| (key.clone(), f)))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            let in_frontier: HashSet<&CoeffKey> = frontier.iter().collect();
            let mut next = BTreeSet::new();
            for (_, form) in &built {
                for dep in form.dependencies() {
                    if !self.values.contains_key(dep)
                        && !pending.contains_key(dep)
                        && !in_frontier.contains(dep)
                    {
                        next.insert(dep.clone());
                    }
                }
            }
            pending.extend(built);
            frontier = next.into_iter().collect();
        }

        let mut order: Vec<CoeffKey> = pending.keys().cloned().collect();
        order.sort_by(|a, b| {
            (a.1, std::cmp::Reverse(a.0.len()), &a.0).cmp(&(b.1, std::cmp::Reverse(b.0.len()), &b.0))
        });
        let mut start = 0;
        while start < order.len() {
            let level = (order[start].1, order[start].0.len());
            let end = order[start..]
                .iter()
                .position(|k| (k.1, k.0.len()) != level)
                .map_or(order.len(), |p| start + p);
            let this = &*self;
            let solved: Vec<(CoeffKey, QRatFn)> = self.pool.install(|| {
                order[start..end]
                    .par_iter()
                    .map(|key| this.evaluate_form(&pending[key]).map(|v| (key.clone(), v)))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            self.values.extend(solved);
            start = end;
        }
        Ok(())
    }

    /// The coefficient `λ_j^l` of `key`; `j = 0` gives zero.
    pub fn lambda(&mut self, key: &LambdaKey) -> Result<QRatFn, EngineError> {
        let ck = (key.seq.clone(), key.j);
        self.ensure([ck.clone()])?;
        Ok(self.lookup(&ck))
    }

    /// `[λ_1^l, ..., λ_k^l]` for an even sequence of length at least 2.
    pub fn nu0_symbolic_expansion(
        &mut self,
        l: &IndexSequence,
        k: u32,
    ) -> Result<Vec<QRatFn>, EngineError> {
        if l.parity() == Parity::Odd {
            return Err(EngineError::ContractViolation(format!(
                "{l} has odd parity"
            )));
        }
        if l.len() < 2 {
            return Err(EngineError::ContractViolation(
                "expansion needs at least two pairs".into(),
            ));
        }
        let canon = l.canonicalize();
        let keys: Vec<CoeffKey> = (1..=k).map(|j| (canon.clone(), j)).collect();
        self.ensure(keys.iter().cloned())?;
        Ok(keys.iter().map(|key| self.lookup(key)).collect())
    }

    /// `c_j` for a single `j >= 1`.
    pub fn coefficient(&mut self, j: u32) -> Result<QRatFn, EngineError> {
        if j == 0 {
            return Err(EngineError::ContractViolation("c_j needs j >= 1".into()));
        }
        let (budget, counters) = (&self.budget, &self.counters);
        let assembly = self.pool.install(|| build_assembly(j, budget, counters))?;
        self.ensure(assembly.dependencies().cloned())?;
        self.evaluate_form(&assembly)
    }

    /// `c_1, ..., c_{k₀}` with enumeration statistics.
    pub fn expansion_coefficients(&mut self, k0: u32) -> Result<ExpansionResult, EngineError> {
        if k0 == 0 {
            return Err(EngineError::ContractViolation("order k₀ must be >= 1".into()));
        }
        let started = Instant::now();
        let (enum0, surv0) = self.counters.snapshot();
        let memo0 = self.values.len();
        let mut coefficients = Vec::with_capacity(k0 as usize);
        for j in 1..=k0 {
            match self.coefficient(j) {
                Ok(c) => coefficients.push(c),
                Err(EngineError::Overflow(cause)) => {
                    return Err(EngineError::PartialExpansion {
                        completed: coefficients,
                        failed_at: j,
                        cause,
                    })
                }
                Err(other) => return Err(other),
            }
        }
        let (enum1, surv1) = self.counters.snapshot();
        Ok(ExpansionResult {
            order: k0,
            leading: QRatFn::one(),
            coefficients,
            stats: ExpansionStats {
                enumerated: enum1 - enum0,
                parity_survivors: surv1 - surv0,
                coefficients_evaluated: self.values.len() - memo0,
                wall_time: started.elapsed(),
            },
        })
    }

    /// `1/N + Σ_{j<=k₀} c_j(β²)/N^j` in floating point.
    pub fn evaluate_truncated(&mut self, beta: f64, k0: u32, n: u32) -> Result<f64, EngineError> {
        beta_squared(beta)?;
        self.expansion_coefficients(k0)?.evaluate(beta, n)
    }
}

impl Default for LambdaEngine {
    fn default() -> Self {
        Self::new(DEFAULT_BUDGET, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn seq(s: &str) -> IndexSequence {
        s.parse().unwrap()
    }

    fn rf(num: &[i64], den: &[i64]) -> QRatFn {
        QRatFn::new(QPoly::from_i64s(num), QPoly::from_i64s(den)).unwrap()
    }

    #[test]
    fn base_case() {
        let base = lambda_base();
        assert_eq!(base, rf(&[1], &[1, -1]));
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(base.eval(&half).unwrap(), BigRational::from_integer(2.into()));
        let mut engine = LambdaEngine::default();
        let key = LambdaKey::strict(&seq("(1,2)(1,2)"), 1, 1).unwrap();
        assert_eq!(engine.lambda(&key).unwrap(), base);
    }

    #[test]
    fn zeroth_coefficient_vanishes() {
        let mut engine = LambdaEngine::default();
        for s in ["(1,2)(1,2)", "(1,2)(1,3)(2,3)", "(1,2)(3,4)(1,2)(3,4)"] {
            let key = LambdaKey::new(&seq(s), 0, 2).unwrap();
            assert!(engine.lambda(&key).unwrap().is_zero());
        }
    }

    #[test]
    fn key_contracts() {
        assert!(LambdaKey::new(&seq("(1,2)(1,3)"), 1, 1).is_err());
        assert!(LambdaKey::new(&seq("(1,2)(1,2)(1,2)(1,2)"), 1, 1).is_err());
        assert!(LambdaKey::new(&seq("(1,2)(1,2)"), 3, 2).is_err());
        assert!(LambdaKey::strict(&seq("(3,4)(3,4)"), 1, 1).is_err());
        assert_eq!(
            LambdaKey::new(&seq("(3,4)(3,4)"), 1, 1).unwrap().seq(),
            &seq("(1,2)(1,2)")
        );
        let mut engine = LambdaEngine::default();
        assert!(engine.nu0_symbolic_expansion(&seq("(1,2)(1,3)"), 1).is_err());
    }

    #[test]
    fn first_two_coefficients() {
        let mut engine = LambdaEngine::default();
        let res = engine.expansion_coefficients(2).unwrap();
        assert_eq!(res.coefficients[0], rf(&[0, 1], &[1, -1]));
        assert_eq!(res.coefficients[1], rf(&[0, -1, -1], &[1, -4, 6, -4, 1]));
        assert!(res.pole_violations().is_empty());
        assert!(res.stats.enumerated > 0);
    }

    #[test]
    fn expansion_of_the_square_overlap() {
        let mut engine = LambdaEngine::default();
        let coeffs = engine.nu0_symbolic_expansion(&seq("(1,2)(1,2)"), 2).unwrap();
        assert_eq!(coeffs[0], lambda_base());
        // at β = 0 the value is (N-1)/N², so the second coefficient is -1 there
        assert_eq!(
            coeffs[1].eval(&BigRational::zero()).unwrap(),
            BigRational::from_integer((-1).into())
        );
    }

    #[test]
    fn evaluate_truncated_examples() {
        let mut engine = LambdaEngine::default();
        assert_eq!(engine.evaluate_truncated(0.0, 3, 10).unwrap(), 0.1);
        let v1 = engine.evaluate_truncated(0.3, 1, 100).unwrap();
        assert!((v1 - 0.01 / 0.91).abs() < 1e-15);
        let v2 = engine.evaluate_truncated(0.3, 2, 100).unwrap();
        let expect = 0.01 / 0.91 - 0.09 * 1.09 / 0.91f64.powi(4) / 1e4;
        assert!((v2 - expect).abs() < 1e-15);
        assert!(matches!(
            engine.evaluate_truncated(1.0, 1, 10),
            Err(EngineError::OutOfDomain(_))
        ));
    }

    #[test]
    fn tiny_budget_fails_cleanly() {
        let mut engine = LambdaEngine::new(1, 1);
        match engine.expansion_coefficients(2) {
            Err(EngineError::PartialExpansion { completed, failed_at, .. }) => {
                assert!(completed.is_empty());
                assert_eq!(failed_at, 1);
            }
            other => panic!("expected budget failure, got {other:?}"),
        }
    }
}
