//! Command-line front end: `expand`, `eval`, `verify` and `selftest`.
//!
//! Exit codes: `0` success, `2` invalid input, `3` work budget exhausted,
//! `4` a verification or self-test check failed. Every flag can also be set
//! through an environment variable named `SK_OVERLAP_<FLAG>`.

mod selftest;
mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::lambda_engine::{EngineError, ExpansionResult, LambdaEngine, DEFAULT_BUDGET};
use crate::rational_algebra::{to_latex, to_plain};
use crate::QRatFn;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "sk-overlap", version, about = "Exact 1/N expansion of ν(R²₁₂) for the SK model at β < 1")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute c_1..c_k₀ exactly.
    Expand(ExpandArgs),
    /// Evaluate 1/N + Σ c_j(β²)/N^j on a grid of β and N.
    Eval(EvalArgs),
    /// Compare the expansion against the numerical oracles.
    Verify(VerifyArgs),
    /// Run the fast invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Latex,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Maximum number of enumerated sequences.
    #[arg(long, env = "SK_OVERLAP_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "SK_OVERLAP_WORKERS", default_value_t = 0)]
    pub workers: usize,
    #[arg(long, env = "SK_OVERLAP_FORMAT", value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report to this file instead of stdout.
    #[arg(long, env = "SK_OVERLAP_OUT")]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExpandArgs {
    /// Truncation order k₀.
    #[arg(long, env = "SK_OVERLAP_ORDER")]
    pub order: u32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long, env = "SK_OVERLAP_ORDER", default_value_t = 2)]
    pub order: u32,
    /// Inverse temperature in [0, 1); repeatable.
    #[arg(long, env = "SK_OVERLAP_BETA", value_delimiter = ',', required = true)]
    pub beta: Vec<f64>,
    /// System size; repeatable.
    #[arg(long = "n", env = "SK_OVERLAP_N", value_delimiter = ',', required = true)]
    pub n: Vec<u32>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, env = "SK_OVERLAP_ORDER", default_value_t = 2)]
    pub order: u32,
    #[arg(long, env = "SK_OVERLAP_BETA", value_delimiter = ',', default_values_t = [0.0, 0.3])]
    pub beta: Vec<f64>,
    #[arg(long = "n", env = "SK_OVERLAP_N", value_delimiter = ',', default_values_t = [10, 12])]
    pub n: Vec<u32>,
    /// Disorder samples per Monte Carlo estimate.
    #[arg(long, env = "SK_OVERLAP_SAMPLES", default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, env = "SK_OVERLAP_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Remainder constant C in the tolerance 3σ + C·N^-(k₀+1/2).
    #[arg(long, env = "SK_OVERLAP_C_REM", default_value_t = 10.0)]
    pub c_rem: f64,
    /// Read Monte Carlo records from this file instead of sampling.
    #[arg(long, env = "SK_OVERLAP_RECORDS")]
    pub records: Option<std::path::PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    #[command(flatten)]
    pub common: Common,
    /// Negative control: corrupt one ρ value before checking the table.
    #[arg(long, hide = true, env = "SK_OVERLAP_INJECT_FAULT")]
    pub inject_fault: bool,
}

/// A failure carrying its exit code; the message goes to stderr.
#[derive(Debug)]
pub(crate) struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Overflow(_) | EngineError::PartialExpansion { .. } => EXIT_BUDGET,
            _ => EXIT_INVALID,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<crate::sk_oracle::OracleError> for Failure {
    fn from(e: crate::sk_oracle::OracleError) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::invalid(format!("I/O error: {e}"))
    }
}

pub(crate) fn check_common(c: &Common) -> Result<(), Failure> {
    if c.budget == 0 {
        return Err(Failure::invalid("--budget must be positive"));
    }
    Ok(())
}

pub(crate) fn check_order(order: u32) -> Result<(), Failure> {
    if order == 0 {
        return Err(Failure::invalid("--order must be at least 1"));
    }
    Ok(())
}

pub(crate) fn check_betas(betas: &[f64]) -> Result<(), Failure> {
    for &b in betas {
        if !(0.0..1.0).contains(&b) {
            return Err(Failure::invalid(format!("β = {b} is outside [0, 1)")));
        }
    }
    Ok(())
}

pub(crate) fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
}

#[derive(Serialize)]
struct ExpandHeader {
    k0: u32,
    enumerated: u64,
    parity_survivors: u64,
    coefficients_evaluated: usize,
}

#[derive(Serialize)]
struct CoefficientLine<'a> {
    j: usize,
    c: &'a str,
}

fn coefficient_text(format: Format, j: usize, c: &QRatFn) -> String {
    match format {
        Format::Text => format!("c_{j} = {}\n", to_plain(c)),
        Format::Latex => format!("c_{j} = {}\n", to_latex(c)),
        Format::Json => {
            let plain = to_plain(c);
            let line = serde_json::to_string(&CoefficientLine { j, c: &plain }).expect("serializes");
            format!("{line}\n")
        }
    }
}

fn expansion_document(format: Format, res: &ExpansionResult) -> String {
    let s = &res.stats;
    let mut doc = match format {
        Format::Json => {
            let header = ExpandHeader {
                k0: res.order,
                enumerated: s.enumerated,
                parity_survivors: s.parity_survivors,
                coefficients_evaluated: s.coefficients_evaluated,
            };
            format!("{}\n", serde_json::to_string(&header).expect("serializes"))
        }
        _ => format!(
            "# k0={} enumerated={} parity_survivors={} coefficients_evaluated={}\n",
            res.order, s.enumerated, s.parity_survivors, s.coefficients_evaluated
        ),
    };
    for (i, c) in res.coefficients.iter().enumerate() {
        doc.push_str(&coefficient_text(format, i + 1, c));
    }
    let poles = res.pole_violations();
    if !poles.is_empty() {
        doc.push_str(&format!("# denominator not a power of (1-x) for j in {poles:?}\n"));
    }
    doc
}

fn cmd_expand(args: &ExpandArgs, err: &mut dyn Write) -> Result<String, Failure> {
    check_common(&args.common)?;
    check_order(args.order)?;
    let started = Instant::now();
    let mut engine = LambdaEngine::new(args.common.budget, args.common.workers);
    match engine.expansion_coefficients(args.order) {
        Ok(res) => {
            let _ = writeln!(err, "wall time: {:.3} s", started.elapsed().as_secs_f64());
            Ok(expansion_document(args.common.format, &res))
        }
        Err(EngineError::PartialExpansion {
            completed,
            failed_at,
            cause,
        }) => {
            let mut partial = String::new();
            for (i, c) in completed.iter().enumerate() {
                partial.push_str(&coefficient_text(args.common.format, i + 1, c));
            }
            let _ = write!(err, "{partial}");
            Err(Failure {
                code: EXIT_BUDGET,
                message: format!(
                    "{cause} while computing c_{failed_at}; {} coefficient(s) completed (shown above)",
                    completed.len()
                ),
            })
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct EvalLine {
    beta: f64,
    #[serde(rename = "N")]
    n: u32,
    k0: u32,
    value: f64,
}

fn cmd_eval(args: &EvalArgs) -> Result<String, Failure> {
    check_common(&args.common)?;
    check_order(args.order)?;
    check_betas(&args.beta)?;
    if args.n.contains(&0) {
        return Err(Failure::invalid("N must be at least 1"));
    }
    let mut engine = LambdaEngine::new(args.common.budget, args.common.workers);
    let res = engine.expansion_coefficients(args.order)?;
    let mut doc = String::new();
    for &beta in &args.beta {
        for &n in &args.n {
            let value = res.evaluate(beta, n)?;
            let line = match args.common.format {
                Format::Json => serde_json::to_string(&EvalLine {
                    beta,
                    n,
                    k0: args.order,
                    value,
                })
                .expect("serializes"),
                _ => format!("beta={beta} N={n} k0={} value={value:e}", args.order),
            };
            doc.push_str(&line);
            doc.push('\n');
        }
    }
    Ok(doc)
}

fn dispatch(cli: &Cli, err: &mut dyn Write) -> Result<(String, i32), Failure> {
    match &cli.command {
        Command::Expand(a) => Ok((cmd_expand(a, err)?, EXIT_OK)),
        Command::Eval(a) => Ok((cmd_eval(a)?, EXIT_OK)),
        Command::Verify(a) => verify::cmd_verify(a),
        Command::Selftest(a) => selftest::cmd_selftest(a),
    }
}

fn out_path(cli: &Cli) -> Option<&std::path::Path> {
    let common = match &cli.command {
        Command::Expand(a) => &a.common,
        Command::Eval(a) => &a.common,
        Command::Verify(a) => &a.common,
        Command::Selftest(a) => &a.common,
    };
    common.out.as_deref()
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli, err) {
        Ok((doc, code)) => {
            let written = match out_path(&cli) {
                Some(path) => fs::write(path, &doc),
                None => out.write_all(doc.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: I/O error: {e}");
                return EXIT_INVALID;
            }
            code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
