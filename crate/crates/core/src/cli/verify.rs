use std::fs;

use serde::Serialize;

use super::{check_betas, check_common, check_order, pool, Failure, Format, VerifyArgs, EXIT_OK, EXIT_VERIFY_FAILED};
use crate::lambda_engine::LambdaEngine;
use crate::sk_oracle::{
    derivative_fd, derivative_rhs, nu0_r_minus_sq, nu_r2_mc, EstimateWithError, Observable,
    OracleRecord, QuadratureGrid,
};

const DERIVATIVE_N: usize = 3;
const DERIVATIVE_NODES: usize = 30;
const DERIVATIVE_STEP: f64 = 1e-4;
const DERIVATIVE_TOL: f64 = 1e-6;
const DERIVATIVE_TIMES: [f64; 2] = [0.0, 0.5];

#[derive(Debug, Clone, Serialize)]
struct Row {
    #[serde(rename = "N")]
    n: usize,
    beta: f64,
    t: f64,
    samples: u64,
    seed: u64,
    estimator: String,
    value: f64,
    std_error: f64,
    expected: f64,
    deviation: f64,
    tolerance: f64,
    pass: bool,
}

impl Row {
    fn text(&self) -> String {
        format!(
            "{} {} N={} beta={} t={} samples={} value={} std_error={:e} expected={} deviation={:e} tolerance={:e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.estimator,
            self.n,
            self.beta,
            self.t,
            self.samples,
            self.value,
            self.std_error,
            self.expected,
            self.deviation,
            self.tolerance
        )
    }
}

fn stochastic_row(
    estimator: &str,
    n: usize,
    beta: f64,
    t: f64,
    seed: u64,
    est: &EstimateWithError,
    expected: f64,
    remainder: f64,
) -> Row {
    let deviation = est.value - expected;
    let tolerance = 3.0 * est.std_error + remainder;
    Row {
        n,
        beta,
        t,
        samples: est.samples,
        seed,
        estimator: estimator.to_owned(),
        value: est.value,
        std_error: est.std_error,
        expected,
        deviation,
        tolerance,
        pass: deviation.abs() <= tolerance,
    }
}

struct Records(Vec<OracleRecord>);

impl Records {
    fn load(path: &std::path::Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)?;
        let mut out = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            out.push(OracleRecord::from_line(line)?);
        }
        Ok(Self(out))
    }

    fn find(&self, estimator: &str, n: usize, beta: f64) -> Result<(EstimateWithError, u64), Failure> {
        self.0
            .iter()
            .find(|r| r.estimator == estimator && r.n == n && r.beta == beta)
            .map(|r| {
                (
                    EstimateWithError {
                        value: r.value,
                        std_error: r.std_error,
                        samples: r.samples,
                    },
                    r.seed,
                )
            })
            .ok_or_else(|| {
                Failure::invalid(format!("no {estimator} record for N={n} beta={beta}"))
            })
    }
}

pub(super) fn cmd_verify(args: &VerifyArgs) -> Result<(String, i32), Failure> {
    check_common(&args.common)?;
    check_order(args.order)?;
    check_betas(&args.beta)?;
    if args.n.iter().any(|&n| n < 2) {
        return Err(Failure::invalid("every N must be at least 2"));
    }
    if args.samples == 0 {
        return Err(Failure::invalid("--samples must be positive"));
    }
    if !(args.c_rem >= 0.0) {
        return Err(Failure::invalid("--c-rem must be non-negative"));
    }
    let records = args.records.as_deref().map(Records::load).transpose()?;
    let mut engine = LambdaEngine::new(args.common.budget, args.common.workers);
    let expansion = engine.expansion_coefficients(args.order)?;
    let workers = pool(args.common.workers);
    let mut rows = Vec::new();

    for &beta in &args.beta {
        for &n in &args.n {
            let n = n as usize;
            let (est, seed) = match &records {
                Some(r) => r.find("nu_r2_mc", n, beta)?,
                None => (
                    workers.install(|| nu_r2_mc(n, beta, args.samples, args.seed))?,
                    args.seed,
                ),
            };
            let expected = expansion.evaluate(beta, n as u32)?;
            let remainder = args.c_rem * (n as f64).powf(-(args.order as f64 + 0.5));
            rows.push(stochastic_row("nu_r2_mc", n, beta, 1.0, seed, &est, expected, remainder));
        }
        for &n in &args.n {
            let n = n as usize;
            let (est, seed) = match &records {
                Some(r) => r.find("nu0_r_minus_sq", n, beta)?,
                None => (
                    workers.install(|| nu0_r_minus_sq(n, beta, args.samples, args.seed))?,
                    args.seed,
                ),
            };
            let expected = 1.0 / (n as f64 * (1.0 - beta * beta));
            let remainder = args.c_rem * (n as f64).powf(-1.5);
            rows.push(stochastic_row("nu0_r_minus_sq", n, beta, 0.0, seed, &est, expected, remainder));
        }
    }

    let grid = QuadratureGrid::new(DERIVATIVE_N, DERIVATIVE_NODES)?;
    let f = Observable::one(2).eps(1).eps(2).cavity_overlap(1, 2);
    for &beta in &args.beta {
        for t in DERIVATIVE_TIMES {
            let fd = workers.install(|| derivative_fd(&grid, &f, beta, t, DERIVATIVE_STEP))?;
            let rhs = workers.install(|| derivative_rhs(&grid, &f, beta, t))?;
            let deviation = fd - rhs;
            rows.push(Row {
                n: DERIVATIVE_N,
                beta,
                t,
                samples: 0,
                seed: 0,
                estimator: "cavity_derivative".to_owned(),
                value: fd,
                std_error: 0.0,
                expected: rhs,
                deviation,
                tolerance: DERIVATIVE_TOL,
                pass: deviation.abs() <= DERIVATIVE_TOL,
            });
        }
    }

    let passed = rows.iter().filter(|r| r.pass).count();
    let mut doc = String::new();
    for row in &rows {
        match args.common.format {
            Format::Json => doc.push_str(&serde_json::to_string(row).expect("serializes")),
            _ => doc.push_str(&row.text()),
        }
        doc.push('\n');
    }
    if args.common.format != Format::Json {
        doc.push_str(&format!(
            "# {passed}/{} checks passed (k0={}, C_rem={})\n",
            rows.len(),
            args.order,
            args.c_rem
        ));
    }
    let code = if passed == rows.len() { EXIT_OK } else { EXIT_VERIFY_FAILED };
    Ok((doc, code))
}
