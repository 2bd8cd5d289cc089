//! `ν_t(f)` by tensor Gauss–Hermite quadrature over every coupling, with the
//! Gibbs average of each quadrature point computed exactly.
//!
//! Observables are products of single spins `σ_i^l` and overlaps `R_{l,l'}`
//! or `R⁻_{l,l'}`. Expanding every overlap into its site sum turns the
//! replica average into a sum of products of one-replica multi-spin
//! correlations, which the Gibbs state provides for every site set.

use gauss_quad::GaussHermite;

use super::gibbs::{gibbs_exact, pairwise_sum, DisorderSample, GibbsState};
use super::OracleError;
use crate::sequences::{enumerate_c_sets, IndexSequence};
use crate::budget::WorkBudget;

pub const MAX_QUADRATURE_SPINS: usize = 4;
pub const MAX_NODES: usize = 40;
/// Cap on tensor-grid points; every point costs one exact Gibbs state.
pub const MAX_POINTS: usize = 2_000_000;

/// Overlap factor between replicas `a < b` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overlap {
    pub a: usize,
    pub b: usize,
    /// `R⁻`: sum over the first `N - 1` sites, still divided by `N`.
    pub cavity: bool,
}

/// `Π σ_{site}^{replica} · Π R_{a,b}` with 1-based replicas and sites.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Observable {
    spins: Vec<(usize, usize)>,
    overlaps: Vec<Overlap>,
    replicas: usize,
}

impl Observable {
    /// The constant `1` on `replicas` replicas.
    pub fn one(replicas: usize) -> Self {
        Self {
            replicas,
            ..Self::default()
        }
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    /// Multiplies by `σ_site^replica`; `site = 0` denotes the cavity site `N`.
    pub fn spin(mut self, replica: usize, site: usize) -> Self {
        self.replicas = self.replicas.max(replica);
        self.spins.push((replica, site));
        self
    }

    /// Multiplies by the cavity spin `ε_replica`.
    pub fn eps(self, replica: usize) -> Self {
        self.spin(replica, 0)
    }

    pub fn overlap(mut self, a: usize, b: usize) -> Self {
        self.replicas = self.replicas.max(a).max(b);
        self.overlaps.push(Overlap { a, b, cavity: false });
        self
    }

    pub fn cavity_overlap(mut self, a: usize, b: usize) -> Self {
        self.replicas = self.replicas.max(a).max(b);
        self.overlaps.push(Overlap { a, b, cavity: true });
        self
    }

    /// `f · ε^l R⁻_l` for an index sequence `l`.
    pub fn times_sequence(mut self, l: &IndexSequence) -> Self {
        for p in l.pairs() {
            self = self
                .eps(p.lo() as usize)
                .eps(p.hi() as usize)
                .cavity_overlap(p.lo() as usize, p.hi() as usize);
        }
        self
    }

    /// Each replica's spin factors, as a site bit mask.
    fn base_masks(&self, n: usize) -> Vec<usize> {
        let mut masks = vec![0usize; self.replicas + 1];
        for &(r, site) in &self.spins {
            let bit = if site == 0 { n - 1 } else { site - 1 };
            masks[r] ^= 1 << bit;
        }
        masks
    }

    fn validate(&self, n: usize) -> Result<(), OracleError> {
        for &(r, site) in &self.spins {
            if r == 0 || site > n {
                return Err(OracleError::InvalidInput(format!(
                    "spin σ_{site}^{r} does not exist for N = {n}"
                )));
            }
        }
        for o in &self.overlaps {
            if o.a == 0 || o.a >= o.b {
                return Err(OracleError::InvalidInput(format!(
                    "overlap ({}, {}) needs 1 <= a < b",
                    o.a, o.b
                )));
            }
        }
        Ok(())
    }

    /// `⟨f⟩` under one Gibbs state.
    pub fn gibbs_average(&self, g: &GibbsState<f64>) -> f64 {
        let n = g.n();
        let base = self.base_masks(n);
        let ranges: Vec<usize> = self
            .overlaps
            .iter()
            .map(|o| if o.cavity { n - 1 } else { n })
            .collect();
        let mut sites = vec![0usize; self.overlaps.len()];
        let mut terms = Vec::new();
        let mut masks = base.clone();
        loop {
            masks.copy_from_slice(&base);
            for (o, &i) in self.overlaps.iter().zip(&sites) {
                masks[o.a] ^= 1 << i;
                masks[o.b] ^= 1 << i;
            }
            terms.push(masks[1..].iter().map(|&m| g.correlation(m)).product::<f64>());
            // odometer over site tuples
            let mut k = 0;
            loop {
                if k == sites.len() {
                    let scale = (n as f64).powi(self.overlaps.len() as i32);
                    return pairwise_sum(&terms) / scale;
                }
                sites[k] += 1;
                if sites[k] < ranges[k] {
                    break;
                }
                sites[k] = 0;
                k += 1;
            }
        }
    }
}

/// Standard-normal Gauss–Hermite nodes and weights; weights sum to one.
fn normal_rule(nodes: usize) -> Result<Vec<(f64, f64)>, OracleError> {
    let rule = GaussHermite::new(nodes)
        .map_err(|e| OracleError::InvalidInput(format!("Gauss–Hermite rule: {e}")))?;
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (x * std::f64::consts::SQRT_2, w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let total = pairwise_sum(&weights);
    Ok(pairs.into_iter().map(|(x, w)| (x, w / total)).collect())
}

/// Prepared tensor grid for fixed `(N, nodes)`.
pub struct QuadratureGrid {
    n: usize,
    rule: Vec<(f64, f64)>,
    dims: usize,
}

impl QuadratureGrid {
    pub fn new(n: usize, nodes: usize) -> Result<Self, OracleError> {
        if n == 0 || n > MAX_QUADRATURE_SPINS {
            return Err(OracleError::Resource(format!(
                "quadrature supports 1 <= N <= {MAX_QUADRATURE_SPINS}, got {n}"
            )));
        }
        if !(2..=MAX_NODES).contains(&nodes) {
            return Err(OracleError::Resource(format!(
                "node count {nodes} outside 2..={MAX_NODES}"
            )));
        }
        let dims = n * (n - 1) / 2;
        let points = (nodes as u128).pow(dims as u32);
        if points > MAX_POINTS as u128 {
            return Err(OracleError::Resource(format!(
                "{nodes}^{dims} quadrature points exceed the cap {MAX_POINTS}"
            )));
        }
        Ok(Self {
            n,
            rule: normal_rule(nodes)?,
            dims,
        })
    }

    fn points(&self) -> usize {
        self.rule.len().pow(self.dims as u32)
    }

    /// `E⟨f_k⟩_t` for several observables sharing one pass over the grid.
    pub fn expect_many(&self, observables: &[Observable], beta: f64, t: f64) -> Result<Vec<f64>, OracleError> {
        for f in observables {
            f.validate(self.n)?;
        }
        let q = self.rule.len();
        let mut acc: Vec<Vec<f64>> = vec![Vec::with_capacity(self.points()); observables.len()];
        let mut couplings = vec![0.0; self.dims];
        for point in 0..self.points() {
            let mut weight = 1.0;
            let mut rest = point;
            for c in couplings.iter_mut() {
                let (x, w) = self.rule[rest % q];
                *c = x;
                weight *= w;
                rest /= q;
            }
            let sample = DisorderSample::new(self.n, couplings.clone(), 0)?;
            let g = gibbs_exact(&sample, beta, t)?;
            for (f, slot) in observables.iter().zip(acc.iter_mut()) {
                slot.push(weight * f.gibbs_average(&g));
            }
        }
        Ok(acc.iter().map(|v| pairwise_sum(v)).collect())
    }

    pub fn expect(&self, f: &Observable, beta: f64, t: f64) -> Result<f64, OracleError> {
        Ok(self.expect_many(std::slice::from_ref(f), beta, t)?[0])
    }
}

/// `ν_t(f)` by tensor Gauss–Hermite quadrature with `nodes` points per coupling.
pub fn nu_t_quadrature(f: &Observable, n: usize, beta: f64, t: f64, nodes: usize) -> Result<f64, OracleError> {
    QuadratureGrid::new(n, nodes)?.expect(f, beta, t)
}

/// The terms `β^2 ρ(l) · f ε^l R⁻_l`, `l ∈ C_1(n)`, of the first `t`-derivative
/// of `ν_t(f)`, for `f` on `n` replicas.
pub fn derivative_terms(f: &Observable) -> Result<Vec<(f64, Observable)>, OracleError> {
    let n = f.replicas() as u32;
    let budget = WorkBudget::unlimited();
    let iter = enumerate_c_sets(1, n, &budget)
        .map_err(|e| OracleError::InvalidInput(e.to_string()))?;
    iter.map(|item| {
        let item = item.map_err(|e| OracleError::InvalidInput(e.to_string()))?;
        let rho = item.rho.0.to_string().parse::<f64>().expect("small integer");
        Ok((rho, f.clone().times_sequence(&item.seq)))
    })
    .collect()
}

/// Right side of the first-derivative formula, `Σ_l β²ρ(l) ν_t(f ε^l R⁻_l)`.
pub fn derivative_rhs(grid: &QuadratureGrid, f: &Observable, beta: f64, t: f64) -> Result<f64, OracleError> {
    let terms = derivative_terms(f)?;
    let observables: Vec<Observable> = terms.iter().map(|(_, o)| o.clone()).collect();
    let values = grid.expect_many(&observables, beta, t)?;
    let parts: Vec<f64> = terms
        .iter()
        .zip(values)
        .map(|((rho, _), v)| beta * beta * rho * v)
        .collect();
    Ok(pairwise_sum(&parts))
}

/// `∂_t ν_t(f)` by finite differences with one Richardson step.
///
/// Interior points use the centered stencil; `t` within `h` of `0` or `1`
/// uses the second-order one-sided stencil, since `E_t` needs `t >= 0`.
pub fn derivative_fd(grid: &QuadratureGrid, f: &Observable, beta: f64, t: f64, h: f64) -> Result<f64, OracleError> {
    let nu = |s: f64| grid.expect(f, beta, s);
    let estimate = |h: f64| -> Result<f64, OracleError> {
        if t - h >= 0.0 && t + h <= 1.0 {
            Ok((nu(t + h)? - nu(t - h)?) / (2.0 * h))
        } else {
            let dir = if t + 2.0 * h <= 1.0 { 1.0 } else { -1.0 };
            let (a, b, c) = (nu(t)?, nu(t + dir * h)?, nu(t + dir * 2.0 * h)?);
            Ok(dir * (-3.0 * a + 4.0 * b - c) / (2.0 * h))
        }
    };
    let coarse = estimate(h)?;
    let fine = estimate(h / 2.0)?;
    // both stencils have leading error O(h²)
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_products_factorize_per_replica() {
        let sample = DisorderSample::new(3, vec![0.3, -1.1, 0.7], 0).unwrap();
        let g = gibbs_exact(&sample, 0.8, 0.6).unwrap();
        let f = Observable::one(2).spin(1, 1).spin(1, 2).spin(2, 1).spin(2, 2);
        let c = g.pair_correlation(0, 1);
        assert!((f.gibbs_average(&g) - c * c).abs() < 1e-15);
        let r2 = Observable::one(2).overlap(1, 2).overlap(1, 2);
        assert!((r2.gibbs_average(&g) - g.overlap_second_moment()).abs() < 1e-15);
    }

    #[test]
    fn infinite_temperature_square_overlap() {
        for n in 1..=3 {
            let f = Observable::one(2).overlap(1, 2).overlap(1, 2);
            let v = nu_t_quadrature(&f, n, 0.0, 1.0, 6).unwrap();
            assert!((v - 1.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn caps() {
        assert!(matches!(QuadratureGrid::new(5, 4), Err(OracleError::Resource(_))));
        assert!(matches!(QuadratureGrid::new(3, 41), Err(OracleError::Resource(_))));
        assert!(matches!(QuadratureGrid::new(4, 40), Err(OracleError::Resource(_))));
        assert!(QuadratureGrid::new(4, 8).is_ok());
    }

    #[test]
    fn derivative_terms_follow_rho() {
        let f = Observable::one(2).eps(1).eps(2).cavity_overlap(1, 2);
        let terms = derivative_terms(&f).unwrap();
        let rhos: Vec<f64> = terms.iter().map(|t| t.0).collect();
        assert_eq!(rhos, vec![1.0, -2.0, -2.0, 3.0]);
        assert_eq!(terms[3].1.replicas(), 4);
    }

    #[test]
    fn one_dimensional_rule_moments() {
        let rule = normal_rule(20).unwrap();
        let moment = |k: i32| rule.iter().map(|(x, w)| w * x.powi(k)).sum::<f64>();
        assert!((moment(2) - 1.0).abs() < 1e-13);
        assert!((moment(4) - 3.0).abs() < 1e-12);
        assert!(moment(3).abs() < 1e-12);
    }
}
