mod common;

use common::{canonical_even_sequences, direct_coefficient, is_zero_at_origin, rf};
use num_bigint::BigInt;
use num_rational::BigRational;
use sk_overlap::budget::WorkBudget;
use sk_overlap::lambda_engine::{lambda_base, EngineError, LambdaEngine, LambdaKey, DEFAULT_BUDGET};
use sk_overlap::rational_algebra::{from_plain, to_plain};
use sk_overlap::sequences::{enumerate_c_sets, IndexSequence};
use sk_overlap::QRatFn;

fn seq(s: &str) -> IndexSequence {
    s.parse().unwrap()
}

fn c3() -> QRatFn {
    // 2x²(5x³ - 4x² - 19x - 6) / (3(x - 1)^7)
    let num = rf(&[0, 0, -12, -38, -8, 10], &[1]);
    let den = rf(&[-3, 21, -63, 105, -105, 63, -21, 3], &[1]);
    num.checked_div(&den).unwrap()
}

#[test]
fn oracle_equivalence_up_to_length_four() {
    let mut engine = LambdaEngine::default();
    let mut checked = 0;
    for len in 1..=4 {
        for l in canonical_even_sequences(len) {
            for j in 1..=2u32 {
                if 2 * j < len as u32 {
                    continue;
                }
                let key = LambdaKey::strict(&l, j, 2).unwrap();
                let memo = engine.lambda(&key).unwrap();
                let direct = direct_coefficient(l.pairs(), j as i64);
                assert_eq!(memo, direct, "l = {l}, j = {j}");
                checked += 1;
            }
        }
    }
    assert!(checked >= 10, "only {checked} coefficients compared");
}

#[test]
fn base_coefficient_matches_closed_form() {
    let mut engine = LambdaEngine::default();
    let key = LambdaKey::strict(&seq("(1,2)(1,2)"), 1, 1).unwrap();
    assert_eq!(engine.lambda(&key).unwrap(), lambda_base());
    assert_eq!(direct_coefficient(seq("(1,2)(1,2)").pairs(), 1), lambda_base());
}

#[test]
fn second_coefficient_of_the_square() {
    // -(2x² - x + 1)/(1 - x)^4, equal to -1 at β = 0 where X = (N-1)/N²
    let mut engine = LambdaEngine::default();
    let got = engine.nu0_symbolic_expansion(&seq("(1,2)(1,2)"), 2).unwrap();
    assert_eq!(got[1], rf(&[-1, 1, -2], &[1, -4, 6, -4, 1]));
}

#[test]
fn published_coefficients() {
    let mut engine = LambdaEngine::default();
    let res = engine.expansion_coefficients(3).unwrap();
    assert_eq!(res.coefficients[0], rf(&[0, 1], &[1, -1]));
    assert_eq!(res.coefficients[1], rf(&[0, -1, -1], &[1, -4, 6, -4, 1]));
    assert_eq!(res.coefficients[2], c3());
    assert_eq!(res.leading, QRatFn::one());
    // 1/N + c1/N = 1/(N(1 - x))
    assert_eq!(&res.leading + &res.coefficients[0], rf(&[1], &[1, -1]));
}

#[test]
fn coefficients_vanish_at_infinite_temperature() {
    let mut engine = LambdaEngine::default();
    let res = engine.expansion_coefficients(3).unwrap();
    assert!(res.coefficients.iter().all(is_zero_at_origin));
}

#[test]
fn pole_structure() {
    let mut engine = LambdaEngine::default();
    let res = engine.expansion_coefficients(3).unwrap();
    assert!(res.pole_violations().is_empty());
    let orders: Vec<u32> = res
        .coefficients
        .iter()
        .map(|c| c.pole_order_at_one().unwrap())
        .collect();
    assert_eq!(orders, vec![1, 4, 7]);
}

#[test]
fn truncation_stability() {
    let mut engine = LambdaEngine::default();
    for (s, j) in [("(1,2)(1,2)", 1), ("(1,2)(1,2)", 2), ("(1,2)(1,3)(2,3)", 2), ("(1,2)(3,4)(1,2)(3,4)", 2)] {
        let l = seq(s);
        let reference = engine.lambda(&LambdaKey::new(&l, j, 2).unwrap()).unwrap();
        for k in 2..=3 {
            let fresh = LambdaEngine::default()
                .nu0_symbolic_expansion(&l, k)
                .unwrap();
            assert_eq!(fresh[j as usize - 1], reference, "{s}, j = {j}, k = {k}");
        }
    }
}

#[test]
fn canonicalization_invariance() {
    let mut engine = LambdaEngine::default();
    for (raw, canon) in [
        ("(3,4)(3,4)", "(1,2)(1,2)"),
        ("(2,5)(2,3)(3,5)", "(1,2)(1,3)(2,3)"),
        ("(4,7)(2,9)(4,7)(2,9)", "(1,2)(3,4)(1,2)(3,4)"),
    ] {
        for j in 1..=2 {
            let a = engine.lambda(&LambdaKey::new(&seq(raw), j, 2).unwrap()).unwrap();
            let b = engine.lambda(&LambdaKey::strict(&seq(canon), j, 2).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn pair_order_does_not_matter() {
    let mut engine = LambdaEngine::default();
    let a = seq("(1,2)(1,3)(2,4)(3,4)");
    let pairs = a.pairs();
    for perm in [[3, 2, 1, 0], [1, 0, 3, 2], [2, 0, 3, 1]] {
        let b = IndexSequence::new(perm.iter().map(|&i| pairs[i]).collect()).unwrap();
        for j in 2..=3 {
            let x = engine.lambda(&LambdaKey::new(&a, j, 3).unwrap()).unwrap();
            let y = engine.lambda(&LambdaKey::new(&b, j, 3).unwrap()).unwrap();
            assert_eq!(x, y, "{b}, j = {j}");
        }
    }
}

/// `Σ_{η ∈ C_r(n)} ρ(η) X(η) = 0`: the `r`-th derivative of `ν_t(1) = 1`.
#[test]
fn derivatives_of_the_constant_vanish() {
    let mut engine = LambdaEngine::default();
    let budget = WorkBudget::unlimited();
    for (r, n) in [(1, 1), (1, 2), (2, 2), (2, 3), (3, 2)] {
        for j in 1..=3u32 {
            let mut total = QRatFn::zero();
            for item in enumerate_c_sets(r, n, &budget).unwrap() {
                let item = item.unwrap();
                if item.seq.parity() != sk_overlap::sequences::Parity::Even
                    || item.seq.len() > 2 * j as usize
                {
                    continue;
                }
                let x = engine.lambda(&LambdaKey::new(&item.seq, j, 3).unwrap()).unwrap();
                let rho = QRatFn::constant(BigRational::from_integer(item.rho.0.clone()));
                total = &total + &(&rho * &x);
            }
            assert!(total.is_zero(), "r = {r}, n = {n}, j = {j}: {total}");
        }
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let one = LambdaEngine::new(DEFAULT_BUDGET, 1).expansion_coefficients(3).unwrap();
    let four = LambdaEngine::new(DEFAULT_BUDGET, 4).expansion_coefficients(3).unwrap();
    assert_eq!(one.coefficients, four.coefficients);
    assert_eq!(one.stats.enumerated, four.stats.enumerated);
    assert_eq!(one.stats.parity_survivors, four.stats.parity_survivors);
    let text: Vec<String> = one.coefficients.iter().map(to_plain).collect();
    let back: Vec<QRatFn> = text.iter().map(|t| from_plain(t).unwrap()).collect();
    assert_eq!(back, one.coefficients);
}

#[test]
fn default_budget_stops_at_fourth_order() {
    let mut engine = LambdaEngine::default();
    match engine.expansion_coefficients(4) {
        Err(EngineError::PartialExpansion { completed, failed_at, .. }) => {
            assert_eq!(failed_at, 4);
            assert_eq!(completed.len(), 3);
            assert_eq!(completed[2], c3());
        }
        other => panic!("expected a clean budget failure, got {other:?}"),
    }
}

#[test]
fn contract_violations() {
    let mut engine = LambdaEngine::default();
    assert!(matches!(
        engine.nu0_symbolic_expansion(&seq("(1,2)(1,3)"), 2),
        Err(EngineError::ContractViolation(_))
    ));
    assert!(LambdaKey::new(&seq("(1,2)(1,2)"), 3, 2).is_err());
    assert!(matches!(
        engine.evaluate_truncated(1.0, 2, 10),
        Err(EngineError::OutOfDomain(_))
    ));
    assert!(engine.expansion_coefficients(0).is_err());
}

#[test]
fn evaluation_is_exact_until_the_final_conversion() {
    let mut engine = LambdaEngine::default();
    for n in [1, 7, 10, 1000] {
        for k in 1..=3 {
            assert_eq!(engine.evaluate_truncated(0.0, k, n).unwrap(), 1.0 / n as f64);
        }
    }
    let res = engine.expansion_coefficients(2).unwrap();
    let q = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
    let x = q(9, 100);
    let one = q(1, 1);
    let inv_n = q(1, 100);
    let expect = &inv_n / (&one - &x)
        - &x * (&one + &x) / (&one - &x).pow(4) * &inv_n * &inv_n;
    assert_eq!(res.evaluate_exact(&x, 100).unwrap(), expect);
}
