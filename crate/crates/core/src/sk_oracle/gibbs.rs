//! Exact Gibbs averages by summation over all `2^N` configurations.
//!
//! Configuration `c` has `σ_i = -1` iff bit `i` of `c` is set. Sites are
//! numbered from `0`; the cavity spin is site `N - 1`.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::OracleError;
use crate::scalar::Real;

/// Largest `N` accepted by [`gibbs_exact`] unless a caller raises the cap.
pub const DEFAULT_MAX_SPINS: usize = 20;

/// Standard normal couplings `g_{ij}`, `i < j`, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderSample<F> {
    n: usize,
    couplings: Vec<F>,
    seed: u64,
}

fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of `(i, j)`, `i < j`, in lexicographic pair order.
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl<F: Real> DisorderSample<F> {
    pub fn new(n: usize, couplings: Vec<F>, seed: u64) -> Result<Self, OracleError> {
        if n == 0 {
            return Err(OracleError::InvalidInput("N must be at least 1".into()));
        }
        if couplings.len() != pair_count(n) {
            return Err(OracleError::InvalidInput(format!(
                "{} couplings given, N = {n} needs {}",
                couplings.len(),
                pair_count(n)
            )));
        }
        Ok(Self { n, couplings, seed })
    }

    /// Draws the couplings from `rng` in lexicographic pair order.
    pub fn draw(n: usize, seed: u64, rng: &mut ChaCha20Rng) -> Result<Self, OracleError> {
        let couplings = (0..pair_count(n))
            .map(|_| F::from_f64(rng.sample::<f64, _>(StandardNormal)).expect("finite"))
            .collect();
        Self::new(n, couplings, seed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn couplings(&self) -> &[F] {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> F {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.couplings[pair_index(self.n, a, b)]
    }

    /// Redraws the couplings `g_{i,N}` to the cavity spin from `rng`.
    pub fn with_cavity_redrawn(&self, rng: &mut ChaCha20Rng) -> Self {
        let mut out = self.clone();
        let last = self.n - 1;
        for i in 0..last {
            out.couplings[pair_index(self.n, i, last)] =
                F::from_f64(rng.sample::<f64, _>(StandardNormal)).expect("finite");
        }
        out
    }
}

/// Immutable Gibbs state of one disorder sample at `(β, t)`.
#[derive(Debug, Clone)]
pub struct GibbsState<F> {
    n: usize,
    beta: F,
    t: F,
    log_partition: F,
    probabilities: Vec<F>,
    /// `⟨Π_{i∈S} σ_i⟩` indexed by the bit mask of `S`.
    correlations: Vec<F>,
}

impl<F: Real> GibbsState<F> {
    /// Builds the state from unnormalized log-weights `β E_t(c)`, one per
    /// configuration, using a max-shifted log-sum-exp.
    pub fn from_log_weights(n: usize, beta: F, t: F, log_weights: &[F]) -> Self {
        assert_eq!(log_weights.len(), 1 << n, "one weight per configuration");
        let top = log_weights
            .iter()
            .copied()
            .fold(F::neg_infinity(), |a, b| a.max(b));
        let shifted: Vec<F> = log_weights.iter().map(|&w| (w - top).exp()).collect();
        let total = pairwise_sum(&shifted);
        let probabilities: Vec<F> = shifted.iter().map(|&w| w / total).collect();
        let mut correlations = probabilities.clone();
        walsh_hadamard(&mut correlations);
        Self {
            n,
            beta,
            t,
            log_partition: top + total.ln(),
            probabilities,
            correlations,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    pub fn t(&self) -> F {
        self.t
    }

    pub fn log_partition(&self) -> F {
        self.log_partition
    }

    pub fn probabilities(&self) -> &[F] {
        &self.probabilities
    }

    /// `⟨Π_{i∈S} σ_i⟩` for the site set with bit mask `mask`.
    pub fn correlation(&self, mask: usize) -> F {
        self.correlations[mask]
    }

    /// `⟨σ_i σ_j⟩`; the diagonal is `1`.
    pub fn pair_correlation(&self, i: usize, j: usize) -> F {
        if i == j {
            F::one()
        } else {
            self.correlations[(1 << i) | (1 << j)]
        }
    }

    /// Row-major `N × N` matrix of `⟨σ_i σ_j⟩`.
    pub fn pair_correlations(&self) -> Vec<F> {
        (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.pair_correlation(i, j))
            .collect()
    }

    /// `⟨R²₁₂⟩ = N⁻² Σ_{i,j} ⟨σ_iσ_j⟩²`, from two independent replicas.
    pub fn overlap_second_moment(&self) -> F {
        self.restricted_overlap_second_moment(self.n)
    }

    /// `N⁻² Σ_{i,j < sites} ⟨σ_iσ_j⟩²`; with `sites = N - 1` this is `⟨(R⁻₁₂)²⟩`.
    pub fn restricted_overlap_second_moment(&self, sites: usize) -> F {
        let mut terms = Vec::with_capacity(sites * sites);
        for i in 0..sites {
            terms.push(F::one());
            for j in i + 1..sites {
                let c = self.pair_correlation(i, j);
                terms.push(c * c + c * c);
            }
        }
        let nf = F::from_usize(self.n).expect("small");
        pairwise_sum(&terms) / (nf * nf)
    }
}

/// `β E_t(c)` for every configuration `c`, by Gray-code updates.
pub fn log_weights<F: Real>(sample: &DisorderSample<F>, beta: F, t: F) -> Vec<F> {
    let n = sample.n();
    let nf = F::from_usize(n).expect("small");
    let bulk = F::one() / nf.sqrt();
    let cavity = (t / nf).sqrt();
    // J_ij = scaled coupling, symmetric, zero diagonal
    let mut j = vec![F::zero(); n * n];
    for a in 0..n {
        for b in a + 1..n {
            let scale = if b == n - 1 { cavity } else { bulk };
            let v = sample.coupling(a, b) * scale;
            j[a * n + b] = v;
            j[b * n + a] = v;
        }
    }
    let mut spins = vec![F::one(); n];
    // field_i = Σ_k J_ik σ_k
    let mut field: Vec<F> = (0..n)
        .map(|a| (0..n).fold(F::zero(), |acc, b| acc + j[a * n + b]))
        .collect();
    let mut energy = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .fold(F::zero(), |acc, (a, b)| acc + j[a * n + b]);
    let mut out = vec![F::zero(); 1 << n];
    let mut gray = 0usize;
    out[0] = beta * energy;
    let two = F::one() + F::one();
    for step in 1usize..(1 << n) {
        let k = step.trailing_zeros() as usize;
        // flipping σ_k changes E by -2 σ_k field_k
        energy = energy - two * spins[k] * field[k];
        spins[k] = -spins[k];
        for a in 0..n {
            field[a] = field[a] + two * spins[k] * j[a * n + k];
        }
        gray ^= 1 << k;
        out[gray] = beta * energy;
    }
    out
}

/// Exact Gibbs state under `E_t`, for `N` up to `max_spins`.
pub fn gibbs_exact_capped<F: Real>(
    sample: &DisorderSample<F>,
    beta: F,
    t: F,
    max_spins: usize,
) -> Result<GibbsState<F>, OracleError> {
    if sample.n() > max_spins {
        return Err(OracleError::Resource(format!(
            "N = {} exceeds the enumeration cap {max_spins}",
            sample.n()
        )));
    }
    if !(t >= F::zero() && t <= F::one()) {
        return Err(OracleError::InvalidInput(format!("t = {t} outside [0, 1]")));
    }
    if !beta.is_finite() {
        return Err(OracleError::InvalidInput(format!("β = {beta} is not finite")));
    }
    let weights = log_weights(sample, beta, t);
    Ok(GibbsState::from_log_weights(sample.n(), beta, t, &weights))
}

/// [`gibbs_exact_capped`] with the default cap of 20 spins.
pub fn gibbs_exact<F: Real>(
    sample: &DisorderSample<F>,
    beta: F,
    t: F,
) -> Result<GibbsState<F>, OracleError> {
    gibbs_exact_capped(sample, beta, t, DEFAULT_MAX_SPINS)
}

/// In-place `v[S] ← Σ_c v[c] (-1)^{|S ∩ c|}`.
fn walsh_hadamard<F: Real>(v: &mut [F]) {
    let mut h = 1;
    while h < v.len() {
        for block in (0..v.len()).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Fixed-shape pairwise summation; the result depends only on the order of
/// `values`.
pub fn pairwise_sum<F: Real>(values: &[F]) -> F {
    match values.len() {
        0 => F::zero(),
        1 => values[0],
        len if len <= 8 => values.iter().copied().fold(F::zero(), |a, b| a + b),
        len => {
            let (l, r) = values.split_at(len / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}
