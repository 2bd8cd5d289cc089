//! Fast invariant suite behind `selftest`.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{check_common, Failure, SelftestArgs, EXIT_OK, EXIT_VERIFY_FAILED};
use crate::budget::WorkBudget;
use crate::lambda_engine::LambdaEngine;
use crate::sequences::{
    count_c_sequences, dump_line, enumerate_c_sets, Branch, IndexSequence, Pair, Parity,
};
use crate::{QPoly, QRatFn};

type Check = Result<(), String>;

fn random_sequence(rng: &mut ChaCha20Rng, len: usize, replicas: u32) -> IndexSequence {
    let pairs = (0..len)
        .map(|_| {
            let a = rng.gen_range(1..replicas);
            let b = rng.gen_range(a + 1..=replicas);
            Pair::new(a, b).expect("valid pair")
        })
        .collect();
    IndexSequence::new(pairs).expect("nonempty")
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn subsequence_counts(rng: &mut ChaCha20Rng) -> Check {
    for len in 1..=6 {
        for _ in 0..20 {
            let l = random_sequence(rng, len, 6);
            for u in 1..=len {
                let fam = l.subsequence_family(u).map_err(|e| e.to_string())?;
                if fam.len() != binomial(len, u) || fam.iter().any(|s| s.len() != u) {
                    return Err(format!("{l}, u={u}: {} subsequences", fam.len()));
                }
            }
        }
    }
    Ok(())
}

fn parity_laws(rng: &mut ChaCha20Rng) -> Check {
    for _ in 0..200 {
        let len = rng.gen_range(1..5);
        let a = random_sequence(rng, len, 7);
        let len = rng.gen_range(1..5);
        let b = random_sequence(rng, len, 7);
        let ab = a.concat(&b);
        if ab.odd_mask() != a.odd_mask() ^ b.odd_mask() {
            return Err(format!("odd replicas of {a}·{b}"));
        }
        if a.parity() == Parity::Even && ab.parity() != b.parity() {
            return Err(format!("even {a} changed the parity of {b}"));
        }
        let doubled = a.concat(&a);
        if doubled.parity() != Parity::Even {
            return Err(format!("{doubled} should be even"));
        }
    }
    Ok(())
}

fn canonicalization(rng: &mut ChaCha20Rng) -> Check {
    for _ in 0..200 {
        let len = rng.gen_range(1..6);
        let l = random_sequence(rng, len, 9);
        let c = l.canonicalize();
        if c.canonicalize() != c || !c.is_canonical() || c.parity() != l.parity() {
            return Err(format!("{l} -> {c}"));
        }
    }
    Ok(())
}

/// `ρ` of every sequence in `C_1(n)` and `C_2(n)`, rebuilt from the branch
/// rule: keep `1`, one new replica `-m`, two new replicas `m(m+1)/2`.
fn rho_table(inject_fault: bool) -> Check {
    let budget = WorkBudget::unlimited();
    let mut injected = !inject_fault;
    for ell in 1..=2 {
        for n in 1..=4u32 {
            let mut seen = 0u64;
            for item in enumerate_c_sets(ell, n, &budget).map_err(|e| e.to_string())? {
                let mut item = item.map_err(|e| e.to_string())?;
                seen += 1;
                if !injected && item.path.steps()[0] == Branch::Add1 {
                    item.rho.0 = -item.rho.0.clone();
                    injected = true;
                }
                let mut m = n as i64;
                let mut expect = BigInt::from(1);
                for step in item.path.steps() {
                    expect *= match step {
                        Branch::Keep => 1,
                        Branch::Add1 => -m,
                        Branch::Add2 => m * (m + 1) / 2,
                    };
                    m += step.growth() as i64;
                }
                if item.rho.0 != expect {
                    return Err(format!("n={n}: {} (expected rho={expect})", dump_line(&item)));
                }
            }
            if num_bigint::BigUint::from(seen) != count_c_sequences(ell, n) {
                return Err(format!("|C_{ell}({n})| = {seen} disagrees with the count"));
            }
        }
    }
    Ok(())
}

fn random_ratfn(rng: &mut ChaCha20Rng) -> QRatFn {
    let mut poly = |deg: usize| {
        QPoly::new(
            (0..=deg)
                .map(|_| BigRational::new(rng.gen_range(-5..=5).into(), rng.gen_range(1..=4).into()))
                .collect(),
        )
    };
    let num = poly(3);
    let mut den = poly(2);
    if den.is_zero() {
        den = QPoly::one();
    }
    QRatFn::new(num, den).expect("nonzero denominator")
}

fn algebra_laws(rng: &mut ChaCha20Rng) -> Check {
    let x0 = BigRational::new(1.into(), 7.into());
    for _ in 0..100 {
        let a = random_ratfn(rng);
        let b = random_ratfn(rng);
        if &(&a + &b) - &b != a {
            return Err(format!("(a+b)-b != a for a={a}, b={b}"));
        }
        if &a + &b != &b + &a || &a * &b != &b * &a {
            return Err(format!("commutativity fails for a={a}, b={b}"));
        }
        if !b.is_zero() && (&a * &b).checked_div(&b).map_err(|e| e.to_string())? != a {
            return Err(format!("(a·b)/b != a for a={a}, b={b}"));
        }
        if a.normalize() != a {
            return Err(format!("normalization not idempotent on {a}"));
        }
        if let (Ok(va), Ok(vb)) = (a.eval(&x0), b.eval(&x0)) {
            let sum = (&a + &b).eval(&x0).map_err(|e| e.to_string())?;
            if sum != va + vb {
                return Err(format!("evaluation not additive for a={a}, b={b}"));
            }
        }
    }
    Ok(())
}

pub(super) fn cmd_selftest(args: &SelftestArgs) -> Result<(String, i32), Failure> {
    check_common(&args.common)?;
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut results: Vec<(&str, Check)> = vec![
        ("subsequence family sizes are binomial", subsequence_counts(&mut rng)),
        ("odd-replica masks combine by xor", parity_laws(&mut rng)),
        ("canonicalization is idempotent", canonicalization(&mut rng)),
        ("rho table for l <= 2", rho_table(args.inject_fault)),
        ("rational function laws", algebra_laws(&mut rng)),
    ];

    let mut engine = LambdaEngine::new(args.common.budget, args.common.workers);
    let res = engine.expansion_coefficients(2)?;
    let c1 = QRatFn::new(QPoly::from_i64s(&[0, 1]), QPoly::from_i64s(&[1, -1])).expect("valid");
    let c2 = QRatFn::new(QPoly::from_i64s(&[0, -1, -1]), QPoly::from_i64s(&[1, -4, 6, -4, 1]))
        .expect("valid");
    let closed = if res.coefficients == [c1, c2] {
        Ok(())
    } else {
        Err(format!("got {:?}", res.coefficients))
    };
    results.push(("first two coefficients", closed));

    let mut doc = String::new();
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(()) => doc.push_str(&format!("ok   {name}\n")),
            Err(detail) => {
                failed += 1;
                doc.push_str(&format!("FAIL {name}: {detail}\n"));
            }
        }
    }
    let code = if failed == 0 { EXIT_OK } else { EXIT_VERIFY_FAILED };
    Ok((doc, code))
}
