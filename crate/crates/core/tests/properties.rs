//! Cross-module invariants: randomized identities and the remaining
//! module-level sweeps not covered by the acceptance criteria.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sudlerlab_core::cf::{cf_of_rational, rational_from_digits};
use sudlerlab_core::constants::{bd_check, estimate_k, vol_41, PowerExponent};
use sudlerlab_core::convergents::default_precision_bits;
use sudlerlab_core::identities::{h_sequence, log_sin_factor_rational, lubinsky_exponents, reflection_max_residual};
use sudlerlab_core::limitfn::{build_limit_spec, factorization_sweep, g_n_product_log, interval_spec, limit_g, perturbed_product_log};
use sudlerlab_core::ostrowski::{decode, encode};
use sudlerlab_core::spectral::spectral;
use sudlerlab_core::sudler::{sudler_stream, SudlerTarget};
use sudlerlab_core::{ConvergentTable, QuadraticIrrational, Rational};

fn table_of(qi: &QuadraticIrrational, k: usize) -> ConvergentTable {
    ConvergentTable::build_quadratic(qi, k, default_precision_bits(qi, k)).unwrap()
}

fn standard_irrationals() -> Vec<QuadraticIrrational> {
    [(1i64, 1i64), (1, 2), (2, 3), (2, 4), (3, 5), (3, 6)]
        .iter()
        .map(|&(a0, a)| QuadraticIrrational::new(vec![a0], vec![a]).unwrap())
        .collect()
}

#[test]
fn cf_roundtrip_thousand_random_rationals() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let b = rng.gen_range(1..=1_000_000i64);
        let a = rng.gen_range(-1_000_000..=1_000_000i64);
        let r = Rational::from_i64(a, b).unwrap();
        let digits = cf_of_rational(&r);
        assert_eq!(rational_from_digits(&digits).unwrap(), r, "roundtrip failed for {a}/{b}");
        if digits.len() > 1 {
            assert!(digits.last().unwrap() > &BigInt::one());
        }
    }
}

proptest! {
    #[test]
    fn prop_cf_roundtrip(a in -10_000_000i64..10_000_000, b in 1i64..10_000_000) {
        let r = Rational::from_i64(a, b).unwrap();
        let digits = cf_of_rational(&r);
        prop_assert_eq!(rational_from_digits(&digits).unwrap(), r);
    }

    #[test]
    fn prop_stream_steps_are_log_factors(a in 1u64..200, b in 2u64..200, seed in 0u64..1000) {
        prop_assume!(a < b);
        let g = {
            let mut x = a;
            let mut y = b;
            while y != 0 { let t = x % y; x = y; y = t; }
            x
        };
        let (a, b) = (a / g, b / g);
        prop_assume!(b >= 2);
        let r = Rational::from_i64(a as i64, b as i64).unwrap();
        let s = sudler_stream(&SudlerTarget::Rational(r.clone()), b - 1, 8).unwrap();
        let n = 1 + seed % (b - 1);
        let step = s.values[n as usize] - s.values[n as usize - 1];
        let factor = log_sin_factor_rational(n, &r).unwrap();
        prop_assert!((step - factor).abs() < 1e-9, "step {} vs factor {}", step, factor);
    }

    #[test]
    fn prop_reflection_residual_small(a in 1u64..9999, b in 2u64..10_000) {
        prop_assume!(a < b);
        let g = { let mut x = a; let mut y = b; while y != 0 { let t = x % y; x = y; y = t; } x };
        let r = Rational::from_i64((a / g) as i64, (b / g) as i64).unwrap();
        let b = r.denom().to_u64().unwrap();
        prop_assume!(b >= 2);
        let s = sudler_stream(&SudlerTarget::Rational(r), b - 1, 4096).unwrap();
        prop_assert!(reflection_max_residual(&s) < 1e-9);
    }

    #[test]
    fn prop_quadratic_tables_satisfy_identities(
        a0 in 0i64..4,
        pre in proptest::collection::vec(1i64..7, 0..3),
        per in proptest::collection::vec(1i64..9, 1..4),
    ) {
        let mut pre_period = vec![a0];
        pre_period.extend(&pre);
        let qi = match QuadraticIrrational::new(pre_period, per) {
            Ok(q) => q,
            Err(_) => return Ok(()), // non-canonical draws are skipped
        };
        let depth = qi.s() + 3 * qi.p() + 4;
        let t = table_of(&qi, depth);
        let kappa = t.kappa().unwrap();
        for k in 1..=t.k_max() {
            let det = &t.entries[k].q * &t.entries[k - 1].p - &t.entries[k].p * &t.entries[k - 1].q;
            prop_assert_eq!(det, if k % 2 == 0 { BigInt::one() } else { -BigInt::one() });
        }
        for k in 0..t.k_max() {
            let d = t.entries[k].delta_f64();
            let d1 = t.entries[k + 1].delta_f64();
            prop_assert!(d > 0.0 && d1 < d);
            prop_assert!(kappa * d <= d1 * (1.0 + 1e-12) && d1 <= (1.0 - kappa) * d * (1.0 + 1e-12));
            let a1 = qi.digit(1);
            if k >= 1 || a1 > 1 {
                let qk1 = t.entries[k + 1].q.to_f64().unwrap();
                let qk = t.entries[k].q.to_f64().unwrap();
                prop_assert!(d < 1.0 / qk1 && d > 1.0 / (qk1 + qk));
            }
        }
        // spectral closed forms reproduce the table exactly
        let sp = spectral(&qi, &t).unwrap();
        prop_assert!(sp.eta_f64 > 1.0);
        prop_assert!((sp.lambda - sp.eta_f64.ln() / qi.p() as f64).abs() < 1e-15);
    }

    #[test]
    fn prop_ostrowski_roundtrip(n in 0u64..100_000, pick in 0usize..6) {
        let qi = standard_irrationals()[pick].clone();
        let t = table_of(&qi, 26);
        let x = encode(&t, &BigUint::from(n)).unwrap();
        prop_assert_eq!(decode(&t, &x.digits).unwrap(), BigUint::from(n));
    }
}

#[test]
fn limit_functions_positive_on_intervals() {
    // 200-point positivity sweep of G_r on I_r for the six standard examples
    for qi in standard_irrationals() {
        let depth = qi.s() + 2 * qi.p() + 20;
        let t = table_of(&qi, depth);
        let sp = spectral(&qi, &t).unwrap();
        for r in 1..=sp.p {
            let spec = build_limit_spec(&t, &sp, r, 1 << 16, 1e-4).unwrap();
            let iv = interval_spec(&t, &sp, r).unwrap();
            let mut min_g = f64::INFINITY;
            for i in 0..200 {
                let x = iv.lo + (iv.hi - iv.lo) * i as f64 / 199.0;
                min_g = min_g.min(limit_g(&spec, x).0);
            }
            assert!(min_g > 0.0, "{qi} r={r}: min G = {min_g}");
        }
    }
}

#[test]
fn factorization_residual_sqrt10_below_q6() {
    let qi = QuadraticIrrational::new(vec![3], vec![6]).unwrap();
    let t = table_of(&qi, 10);
    let worst = factorization_sweep(&t, 6).unwrap();
    assert!(worst < 1e-8, "worst residual {worst:e}");
}

#[test]
fn factorization_with_pre_period_and_longer_period() {
    // s = 1, p = 3 exercises the residue and sign bookkeeping that the
    // single-digit examples cannot
    let qi = QuadraticIrrational::new(vec![2, 1], vec![3, 1, 4]).unwrap();
    let t = table_of(&qi, 12);
    let worst = factorization_sweep(&t, 8).unwrap();
    assert!(worst < 1e-8, "worst residual {worst:e}");
}

#[test]
fn sweep_agrees_with_per_n_factorization_check() {
    // two independent routes to the same residual: the digit-tree sweep and
    // the per-N operation built from the public pieces
    use sudlerlab_core::limitfn::ostrowski_factorization_check;
    let qi = QuadraticIrrational::new(vec![0], vec![2, 4]).unwrap();
    let t = table_of(&qi, 12);
    let k = 5usize;
    let q5 = t.entries[k].q.to_u64().unwrap();
    let mut per_n_worst = 0.0f64;
    for n in 0..q5 {
        per_n_worst = per_n_worst.max(ostrowski_factorization_check(&t, &BigUint::from(n)).unwrap().abs());
    }
    let swept = factorization_sweep(&t, k).unwrap();
    assert!((per_n_worst - swept).abs() < 1e-10, "per-N {per_n_worst:e} vs sweep {swept:e}");
}

#[test]
fn g_n_product_cases() {
    let qi = QuadraticIrrational::new(vec![1], vec![1]).unwrap();
    let t = table_of(&qi, 22);
    let sp = spectral(&qi, &t).unwrap();
    let k0 = sudlerlab_core::limitfn::global_k0(&t, &sp).unwrap().unwrap();
    let specs = vec![build_limit_spec(&t, &sp, 1, 1 << 16, 1e-4).unwrap()];

    // all digits below k0: empty product
    let g = g_n_product_log(&t, &sp, &specs, &BigUint::from(1u32), k0.max(2)).unwrap();
    assert_eq!(g, 0.0);

    // single digit N = q_k, k >= k0: one factor G(epsilon) = G(0)
    let k = k0.max(6);
    let qk = t.entries[k].q.to_u64().unwrap();
    let g1 = g_n_product_log(&t, &sp, &specs, &BigUint::from(qk), k0).unwrap();
    let (gv, _) = limit_g(&specs[0], 0.0);
    assert!((g1 - gv.ln()).abs() < 1e-12);

    // log P_N - log G_N stays in a uniform band over N < q_12
    let q12 = t.entries[12].q.to_u64().unwrap();
    let stream = sudler_stream(
        &SudlerTarget::Quadratic(qi.clone(), t.precision_bits),
        q12,
        1 << 16,
    )
    .unwrap();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in 0..q12 {
        let g = g_n_product_log(&t, &sp, &specs, &BigUint::from(n), k0).unwrap();
        let d = stream.values[n as usize] - g;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    assert!(hi - lo < 4.0, "log(P_N/G_N) band [{lo}, {hi}] too wide");
}

#[test]
fn period_two_limit_functions_attract_their_classes() {
    // [0; (2, 4)]: two residue classes with distinct B_r and alpha_r; the
    // perturbed products along each class must approach their own limit
    let qi = QuadraticIrrational::new(vec![0], vec![2, 4]).unwrap();
    let t = table_of(&qi, 14);
    let sp = spectral(&qi, &t).unwrap();
    assert!((sp.b_f64(1) - sp.b_f64(2)).abs() > 1e-3, "classes must differ");
    for r in 1..=2usize {
        let spec = build_limit_spec(&t, &sp, r, 1 << 16, 1e-4).unwrap();
        let iv = interval_spec(&t, &sp, r).unwrap();
        let grid: Vec<f64> = (0..25).map(|i| iv.lo + (iv.hi - iv.lo) * i as f64 / 24.0).collect();
        let mut sups = Vec::new();
        for m in [2usize, 4] {
            let k = sp.s + m * sp.p + r;
            let mut sup = 0.0f64;
            for &x in &grid {
                let p = perturbed_product_log(&t, k, x).unwrap().exp();
                let g = limit_g(&spec, x).0;
                sup = sup.max((p - g).abs());
            }
            sups.push(sup);
        }
        assert!(sups[1] < sups[0] && sups[1] < 2e-2, "r={r}: sups {sups:?}");
        // the wrong class's limit must NOT attract: compare against the
        // other residue's spec at the deepest k
        let other = build_limit_spec(&t, &sp, 3 - r, 1 << 16, 1e-4).unwrap();
        let k = sp.s + 4 * sp.p + r;
        let mut wrong = 0.0f64;
        let mut right = 0.0f64;
        for &x in &grid {
            let p = perturbed_product_log(&t, k, x).unwrap().exp();
            wrong = wrong.max((p - limit_g(&other, x).0).abs());
            right = right.max((p - limit_g(&spec, x).0).abs());
        }
        assert!(wrong > 10.0 * right, "r={r}: wrong-class sup {wrong} vs right-class {right}");
    }
}

#[test]
fn additive_error_dominates_at_the_zero() {
    // at x = -B_r the limit function vanishes and the perturbed product is
    // left with the additive O(q_k^{-2}) term: P(q_k, -B) q_k^2 stays bounded
    let qi = QuadraticIrrational::new(vec![1], vec![1]).unwrap();
    let t = table_of(&qi, 18);
    let sp = spectral(&qi, &t).unwrap();
    let b = sp.b_f64(1);
    let mut scaled = Vec::new();
    for k in [8usize, 12, 16] {
        let q = t.entries[k].q.to_f64().unwrap();
        let p = perturbed_product_log(&t, k, -b).unwrap().exp();
        scaled.push(p * q * q);
    }
    assert!(scaled.iter().all(|v| (0.1..2.0).contains(v)), "q^2 P(-B) = {scaled:?}");
}

#[test]
fn limit_g_continuous_across_its_zero() {
    let qi = QuadraticIrrational::new(vec![1], vec![1]).unwrap();
    let t = table_of(&qi, 18);
    let sp = spectral(&qi, &t).unwrap();
    let spec = build_limit_spec(&t, &sp, 1, 1 << 14, 1e-3).unwrap();
    let b = spec.b_r;
    assert_eq!(limit_g(&spec, -b).0, 0.0);
    for eps in [1e-4, 1e-6, 1e-8] {
        let left = limit_g(&spec, -b - eps).0;
        let right = limit_g(&spec, -b + eps).0;
        assert!(left.abs() < 1e3 * eps && right.abs() < 1e3 * eps, "eps={eps}: {left} / {right}");
    }
}

#[test]
fn sqrt5_lower_bound_beats_volume_prediction() {
    // for [2; (4)] the eigenvalue bound log(2 + sqrt 5) wins against the
    // volume-scaled average quotient (Vol/4pi) * 4
    let qi = QuadraticIrrational::new(vec![2], vec![4]).unwrap();
    let t = table_of(&qi, 10);
    let sp = spectral(&qi, &t).unwrap();
    let rep = estimate_k(&qi, &t, PowerExponent::Infinity, 4, 10, 65_536).unwrap();
    let lower = (2.0 + 5f64.sqrt()).ln();
    let vol_pred = vol_41() / (4.0 * std::f64::consts::PI) * 4.0;
    assert!((sp.lambda - lower).abs() < 1e-12);
    assert!((rep.k_hat - lower).abs() < 0.02, "K_inf = {}", rep.k_hat);
    assert!(lower > vol_pred && rep.k_hat > vol_pred);
}

#[test]
fn perturbed_product_positive_floor_on_interval() {
    // P_{q_k}(alpha, x) stays above a positive floor on I_1 at k = 16
    let qi = QuadraticIrrational::new(vec![1], vec![1]).unwrap();
    let t = table_of(&qi, 18);
    let sp = spectral(&qi, &t).unwrap();
    let iv = interval_spec(&t, &sp, 1).unwrap();
    let mut min_p = f64::INFINITY;
    for i in 0..100 {
        let x = iv.lo + (iv.hi - iv.lo) * i as f64 / 99.0;
        min_p = min_p.min(perturbed_product_log(&t, 16, x).unwrap().exp());
    }
    assert!(min_p > 0.25, "min P on I_1 = {min_p}");
}

#[test]
fn lubinsky_exponent_large_quotient_estimate() {
    // [0; (a)] with a = 50: c_2 = K_inf/lambda tracks (Vol/4pi) a / log((a + sqrt(a^2+4))/2)
    let qi = QuadraticIrrational::new(vec![0], vec![50]).unwrap();
    let t = table_of(&qi, 4);
    let sp = spectral(&qi, &t).unwrap();
    let rep = estimate_k(&qi, &t, PowerExponent::Infinity, 2, 4, 65_536).unwrap();
    let (c1, c2) = lubinsky_exponents(rep.k_hat, sp.lambda).unwrap();
    assert!((c2 - (c1 + 1.0)).abs() < 1e-12);
    let predicted = vol_41() / (4.0 * std::f64::consts::PI) * 50.0 / sp.lambda;
    let band = (51f64).ln() / sp.lambda; // O(log A / lambda)
    assert!((c2 - predicted).abs() < band, "c2 = {c2}, predicted {predicted} +- {band}");
}

#[test]
fn h_sequence_cesaro_means() {
    let qi = QuadraticIrrational::new(vec![0], vec![1]).unwrap();
    let seq = h_sequence(&qi, 20, 65_536).unwrap();
    let mean = *seq.cesaro.last().unwrap();
    assert!((1.0..=1.2).contains(&mean), "cesaro mean at K=20 is {mean}");

    // the mean approaches twice the fitted K_2 within an O(1)/K band
    let g = QuadraticIrrational::new(vec![1], vec![1]).unwrap();
    let t = table_of(&g, 20);
    let r = estimate_k(&g, &t, PowerExponent::Finite(2.0), 8, 20, 65_536).unwrap();
    assert!((mean - 2.0 * r.k_hat).abs() < 2.0 / 20.0, "mean {mean} vs 2 K_2 = {}", 2.0 * r.k_hat);
}

#[test]
fn bd_prediction_gap_grows_linearly_for_golden() {
    // along golden convergents, |log J - prediction| grows ~ linearly in k
    let g = QuadraticIrrational::new(vec![1], vec![1]).unwrap();
    let t = table_of(&g, 20);
    let mut devs = Vec::new();
    for k in [10usize, 15, 20] {
        let conv = Rational::new(t.entries[k].p.clone(), t.entries[k].q.clone()).unwrap();
        devs.push(bd_check(&conv, 65_536).unwrap().deviation.abs());
    }
    assert!(devs[1] > devs[0] && devs[2] > devs[1], "deviations {devs:?}");
    let per_k: Vec<f64> = devs.iter().zip([10.0, 15.0, 20.0]).map(|(d, k)| d / k).collect();
    assert!(per_k.iter().all(|v| (0.7..0.9).contains(v)), "per-k deviations {per_k:?}");
}

#[test]
fn volume_scaled_average_quotient_example() {
    // (Vol/4pi) * abar for the [2; (4)] expansion is about 0.6461
    let qi = QuadraticIrrational::new(vec![2], vec![4]).unwrap();
    let v = vol_41() / (4.0 * std::f64::consts::PI) * qi.avg_partial_quotient();
    assert!((v - 0.6461).abs() < 1e-4, "value {v}");
}

#[test]
fn interval_uses_first_period_digit_after_r() {
    // for [0; (2)] the upper end of I_1 is (a_{s+2} - kappa/2) B_1 with a = 2
    let qi = QuadraticIrrational::new(vec![0], vec![2]).unwrap();
    let t = table_of(&qi, 14);
    let sp = spectral(&qi, &t).unwrap();
    let iv = interval_spec(&t, &sp, 1).unwrap();
    assert!((iv.hi - (2.0 - sp.kappa / 2.0) * sp.b_f64(1)).abs() < 1e-12);
    assert!((iv.lo + (1.0 - sp.kappa / 2.0) * sp.b_f64(1)).abs() < 1e-12);
}

#[test]
fn transfer_examples_with_large_quotients() {
    // [0; (10)]: the bound carries a_{k+1} = 10 in the denominator and the
    // sweep residual respects it with slack
    let qi = QuadraticIrrational::new(vec![0], vec![10]).unwrap();
    let t = table_of(&qi, 8);
    let sw = sudlerlab_core::identities::transfer_sweep(&t, 6, 65_536).unwrap();
    assert!((sw.bound - (11f64).ln() / 10.0).abs() < 1e-12);
    assert!(sw.ratio < 1.0, "ratio {}", sw.ratio);
}
