//! Disorder Monte Carlo over exact per-sample Gibbs averages.
//!
//! Sample `s` of a run with seed `seed` draws its couplings from
//! `ChaCha20Rng::seed_from_u64(seed)` on stream `s`, so every sample is
//! reproducible on its own. Per-sample values are collected in sample order
//! and reduced by [`pairwise_sum`], which makes estimates independent of the
//! number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gibbs::{gibbs_exact_capped, pairwise_sum, DisorderSample, GibbsState, DEFAULT_MAX_SPINS};
use super::OracleError;
use crate::scalar::Real;

/// Mean of i.i.d. samples with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    /// Sample standard deviation over `sqrt(samples)`; zero for one sample.
    pub std_error: f64,
    pub samples: u64,
}

impl EstimateWithError {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n > 0, "at least one sample");
        // shifting by the first value keeps identical samples exact
        let origin = values[0];
        let shifted: Vec<f64> = values.iter().map(|v| v - origin).collect();
        let mean = origin + pairwise_sum(&shifted) / n as f64;
        let std_error = if n == 1 {
            0.0
        } else {
            let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&sq) / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        };
        Self {
            value: mean,
            std_error,
            samples: n as u64,
        }
    }

    /// Inverse-variance-free average of equally sized independent runs.
    pub fn combine(runs: &[EstimateWithError]) -> Self {
        assert!(!runs.is_empty());
        let k = runs.len() as f64;
        let values: Vec<f64> = runs.iter().map(|r| r.value).collect();
        let vars: Vec<f64> = runs.iter().map(|r| r.std_error * r.std_error).collect();
        Self {
            value: pairwise_sum(&values) / k,
            std_error: pairwise_sum(&vars).sqrt() / k,
            samples: runs.iter().map(|r| r.samples).sum(),
        }
    }
}

/// Couplings of disorder sample `index` in the run seeded by `seed`.
pub fn disorder_sample<F: Real>(n: usize, seed: u64, index: u64) -> Result<DisorderSample<F>, OracleError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    DisorderSample::draw(n, seed, &mut rng)
}

fn check(n: usize, beta: f64, samples: u64) -> Result<(), OracleError> {
    if n == 0 || n > DEFAULT_MAX_SPINS {
        return Err(OracleError::Resource(format!(
            "N = {n} outside 1..={DEFAULT_MAX_SPINS}"
        )));
    }
    if samples == 0 {
        return Err(OracleError::InvalidInput("need at least one sample".into()));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(OracleError::InvalidInput(format!("β = {beta} must be finite and >= 0")));
    }
    Ok(())
}

fn run<G>(n: usize, beta: f64, t: f64, samples: u64, seed: u64, per_sample: G) -> Result<EstimateWithError, OracleError>
where
    G: Fn(&GibbsState<f64>) -> f64 + Sync,
{
    check(n, beta, samples)?;
    let values = (0..samples)
        .into_par_iter()
        .map(|s| {
            let sample = disorder_sample::<f64>(n, seed, s)?;
            let state = gibbs_exact_capped(&sample, beta, t, DEFAULT_MAX_SPINS)?;
            Ok(per_sample(&state))
        })
        .collect::<Result<Vec<f64>, OracleError>>()?;
    Ok(EstimateWithError::from_values(&values))
}

/// `ν(R²₁₂)` at `t = 1` from `samples` disorder draws.
pub fn nu_r2_mc(n: usize, beta: f64, samples: u64, seed: u64) -> Result<EstimateWithError, OracleError> {
    run(n, beta, 1.0, samples, seed, GibbsState::overlap_second_moment)
}

/// `ν₀((R⁻₁₂)²) = E[N⁻² Σ_{i,j<N} ⟨σ_iσ_j⟩₀²]`.
pub fn nu0_r_minus_sq(n: usize, beta: f64, samples: u64, seed: u64) -> Result<EstimateWithError, OracleError> {
    run(n, beta, 0.0, samples, seed, |g| {
        g.restricted_overlap_second_moment(g.n() - 1)
    })
}

/// One line of the oracle's line-delimited JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct OracleRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: f64,
    pub t: f64,
    pub samples: u64,
    pub seed: u64,
    pub estimator: String,
    pub value: f64,
    pub std_error: f64,
}

impl OracleRecord {
    pub fn new(estimator: &str, n: usize, beta: f64, t: f64, seed: u64, est: &EstimateWithError) -> Self {
        Self {
            n,
            beta,
            t,
            samples: est.samples,
            seed,
            estimator: estimator.to_owned(),
            value: est.value,
            std_error: est.std_error,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, OracleError> {
        serde_json::from_str(line).map_err(|e| OracleError::InvalidInput(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_temperature_is_exact() {
        for n in 2..=14 {
            let est = nu_r2_mc(n, 0.0, 1, 7).unwrap();
            assert_eq!(est.value, 1.0 / n as f64);
            assert_eq!(est.std_error, 0.0);
            let est = nu_r2_mc(n, 0.0, 50, 7).unwrap();
            assert_eq!((est.value, est.std_error), (1.0 / n as f64, 0.0));
            let est = nu0_r_minus_sq(n, 0.0, 3, 7).unwrap();
            let expect = (n - 1) as f64 / (n * n) as f64;
            assert!((est.value - expect).abs() < 1e-16);
            assert_eq!(est.std_error, 0.0);
        }
    }

    #[test]
    fn two_spin_single_sample() {
        let g = disorder_sample::<f64>(2, 99, 0).unwrap().couplings()[0];
        let est = nu_r2_mc(2, 0.3, 1, 99).unwrap();
        let th = (0.3 * g / 2f64.sqrt()).tanh();
        assert!((est.value - (2.0 + 2.0 * th * th) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn seeds_reproduce_across_worker_counts() {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| nu_r2_mc(6, 0.4, 200, 5).unwrap());
        let b = four.install(|| nu_r2_mc(6, 0.4, 200, 5).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, nu_r2_mc(6, 0.4, 200, 6).unwrap());
    }

    #[test]
    fn cavity_couplings_do_not_matter_at_t0() {
        let mut rng = ChaCha20Rng::seed_from_u64(123);
        for s in 0..5 {
            let sample = disorder_sample::<f64>(7, 3, s).unwrap();
            let other = sample.with_cavity_redrawn(&mut rng);
            assert_ne!(sample, other);
            let a = gibbs_exact_capped(&sample, 0.3, 0.0, 20).unwrap();
            let b = gibbs_exact_capped(&other, 0.3, 0.0, 20).unwrap();
            assert_eq!(
                a.restricted_overlap_second_moment(6),
                b.restricted_overlap_second_moment(6)
            );
        }
    }

    #[test]
    fn standard_error_definition() {
        let est = EstimateWithError::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(est.value, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((est.std_error - sd / 2.0).abs() < 1e-15);
    }

    #[test]
    fn record_round_trip() {
        let est = EstimateWithError { value: 0.125, std_error: 0.0, samples: 1 };
        let rec = OracleRecord::new("nu_r2_mc", 8, 0.0, 1.0, 42, &est);
        let line = rec.to_line();
        assert_eq!(
            line,
            r#"{"N":8,"beta":0.0,"t":1.0,"samples":1,"seed":42,"estimator":"nu_r2_mc","value":0.125,"std_error":0.0}"#
        );
        assert_eq!(OracleRecord::from_line(&line).unwrap(), rec);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(nu_r2_mc(21, 0.3, 1, 0), Err(OracleError::Resource(_))));
        assert!(nu_r2_mc(4, 0.3, 0, 0).is_err());
        assert!(nu_r2_mc(4, f64::NAN, 1, 0).is_err());
    }
}
