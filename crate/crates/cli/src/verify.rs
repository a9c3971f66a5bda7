//! Verification suites over random or exhaustive corpora. Every suite prints
//! per-check summaries and returns `Ok(false)` (exit code 1) on violation,
//! with the first counterexample.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sudlerlab_core::cf::CfTarget;
use sudlerlab_core::constants::{bound_suite, estimate_k, reflection_extremes_residual, PowerExponent};
use sudlerlab_core::identities::{average_log_check, cotangent_sweep_rational, reflection_max_residual, transfer_sweep};
use sudlerlab_core::limitfn::{factorization_sweep, ostrowski_factorization_check};
use sudlerlab_core::sudler::{sudler_stream, SudlerTarget};
use sudlerlab_core::{spectral, Error, Rational, Result};

use crate::commands::{parse_quadratic, table_for};
use crate::RunConfig;

/// Machine-readable check record, one JSON line per check under `--json`.
fn emit(cfg: &RunConfig, name: &str, value: f64, residual: f64, bound: f64, pass: bool, human: String) {
    if cfg.json {
        println!(
            "{}",
            serde_json::json!({ "name": name, "value": value, "residual": residual, "bound": bound, "pass": pass })
        );
    } else {
        println!("{human}");
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Seeded stream of reduced fractions with denominator in `[2, bmax]`.
fn random_fractions(seed: u64, count: u64, bmax: u64) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count as usize);
    while (out.len() as u64) < count {
        let b = rng.gen_range(2..=bmax);
        let a = rng.gen_range(1..b);
        let g = gcd(a, b);
        out.push((a / g, b / g));
    }
    out
}

fn exhaustive_fractions(bmax: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for b in 2..=bmax {
        for a in 1..b {
            if gcd(a, b) == 1 {
                out.push((a, b));
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_verify(
    cfg: &RunConfig,
    suite: &str,
    random: Option<u64>,
    bmax: Option<u64>,
    exhaustive: bool,
    alpha: Option<&str>,
    upto_k: Option<usize>,
    seed: u64,
) -> Result<bool> {
    match suite {
        "reflection" => fraction_suite(cfg, random, bmax, exhaustive, seed, FractionSuite::Reflection),
        "average" => fraction_suite(cfg, random, bmax, exhaustive, seed, FractionSuite::Average),
        "cotangent" => cotangent_suite(cfg, alpha, upto_k),
        "transfer" => transfer_suite(cfg, alpha, upto_k),
        "factorization" => factorization_suite(cfg, alpha, upto_k),
        "bounds" => bounds_suite(cfg, alpha, upto_k),
        other => Err(Error::Parse { pos: 0, msg: format!("unknown suite '{other}'") }),
    }
}

enum FractionSuite {
    Reflection,
    Average,
}

fn fraction_suite(
    cfg: &RunConfig,
    random: Option<u64>,
    bmax: Option<u64>,
    exhaustive: bool,
    seed: u64,
    kind: FractionSuite,
) -> Result<bool> {
    let bmax = bmax.unwrap_or(100_000);
    let corpus = if exhaustive { exhaustive_fractions(bmax) } else { random_fractions(seed, random.unwrap_or(1000), bmax) };
    let (name, tol) = match kind {
        FractionSuite::Reflection => ("reflection", 1e-9 * cfg.tolerance_scale),
        FractionSuite::Average => ("average", 1e-10 * cfg.tolerance_scale),
    };
    let mut worst: (f64, u64, u64) = (0.0, 0, 0);
    for &(a, b) in &corpus {
        let r = Rational::from_i64(a as i64, b as i64).expect("reduced fraction");
        let residual = match kind {
            FractionSuite::Reflection => {
                let s = sudler_stream(&SudlerTarget::Rational(r), b - 1, cfg.chunk_size)?;
                reflection_max_residual(&s)
            }
            FractionSuite::Average => average_log_check(&r, cfg.chunk_size)?.abs(),
        };
        if residual > worst.0 {
            worst = (residual, a, b);
        }
        if residual > tol {
            emit(cfg, name, residual, residual, tol, false,
                format!("{name}: FAIL at {a}/{b}: residual {residual:e} > {tol:e}"));
            return Ok(false);
        }
    }
    emit(cfg, name, worst.0, worst.0, tol, true,
        format!("{name}: pass ({} fractions, bmax {bmax}, worst residual {:e} at {}/{})", corpus.len(), worst.0, worst.1, worst.2));
    Ok(true)
}

fn cotangent_suite(cfg: &RunConfig, alpha: Option<&str>, upto_k: Option<usize>) -> Result<bool> {
    let qi = parse_quadratic(alpha.unwrap_or("[1; (1)]"))?;
    let k_hi = upto_k.unwrap_or(15);
    let table = table_for(cfg, &CfTarget::Quadratic(qi.clone()), k_hi)?;
    let mut worst = (0.0f64, 0usize, 0u64);
    for k in 1..=k_hi {
        let conv = Rational::new(table.entries[k].p.clone(), table.entries[k].q.clone())?;
        if table.entries[k].q.to_u64() == Some(1) {
            continue;
        }
        let (ratio, n) = cotangent_sweep_rational(&conv)?;
        if ratio > worst.0 {
            worst = (ratio, k, n);
        }
        if ratio > 1.0 {
            emit(cfg, "cotangent", ratio, ratio, 1.0, false,
                format!("cotangent: FAIL at k={k}, N={n}: |sum| exceeds (124 + 24 log A_k) q_k"));
            return Ok(false);
        }
    }
    emit(cfg, "cotangent", worst.0, worst.0, 1.0, true,
        format!("cotangent: pass (alpha {qi}, k <= {k_hi}, worst |sum|/bound = {:e} at k={}, N={})", worst.0, worst.1, worst.2));
    Ok(true)
}

fn transfer_suite(cfg: &RunConfig, alpha: Option<&str>, upto_k: Option<usize>) -> Result<bool> {
    let qi = parse_quadratic(alpha.unwrap_or("[1; (1)]"))?;
    let k_hi = upto_k.unwrap_or(12);
    let table = table_for(cfg, &CfTarget::Quadratic(qi.clone()), k_hi + 1)?;
    let mut worst = (0.0f64, 0usize);
    for k in 5.min(k_hi)..=k_hi {
        let sw = transfer_sweep(&table, k, cfg.chunk_size)?;
        if sw.ratio > worst.0 {
            worst = (sw.ratio, k);
        }
        if sw.ratio > 50.0 {
            emit(cfg, "transfer", sw.ratio, sw.max_abs_residual, 50.0, false,
                format!("transfer: FAIL at k={k}: |log P_N(alpha) - log P_N(p_k/q_k)| = {} exceeds 50 * bound", sw.max_abs_residual));
            return Ok(false);
        }
    }
    emit(cfg, "transfer", worst.0, worst.0, 50.0, true,
        format!("transfer: pass (alpha {qi}, k <= {k_hi}, worst residual/bound = {:.3} at k={})", worst.0, worst.1));
    Ok(true)
}

fn factorization_suite(cfg: &RunConfig, alpha: Option<&str>, upto_k: Option<usize>) -> Result<bool> {
    let qi = parse_quadratic(alpha.unwrap_or("[1; (1)]"))?;
    let k_hi = upto_k.unwrap_or(10);
    let table = table_for(cfg, &CfTarget::Quadratic(qi.clone()), k_hi + 2)?;
    let tol = 1e-8 * cfg.tolerance_scale;
    // spot-check the per-N operation, then sweep the whole range
    for n in [0u64, 1, 2] {
        let res = ostrowski_factorization_check(&table, &BigUint::from(n))?.abs();
        if res > tol {
            emit(cfg, "factorization", res, res, tol, false,
                format!("factorization: FAIL at N={n}: residual {res:e} > {tol:e}"));
            return Ok(false);
        }
    }
    let worst = factorization_sweep(&table, k_hi)?;
    if worst > tol {
        emit(cfg, "factorization", worst, worst, tol, false,
            format!("factorization: FAIL: worst residual {worst:e} > {tol:e} below q_{k_hi}"));
        return Ok(false);
    }
    emit(cfg, "factorization", worst, worst, tol, true,
        format!("factorization: pass (alpha {qi}, all N < q_{k_hi}, worst residual {worst:e})"));
    Ok(true)
}

fn bounds_suite(cfg: &RunConfig, alpha: Option<&str>, upto_k: Option<usize>) -> Result<bool> {
    let qi = parse_quadratic(alpha.unwrap_or("[1; (1)]"))?;
    let k_hi = upto_k.unwrap_or_else(|| {
        // deepest window that keeps q_k around 1e7
        let lam = sudlerlab_core::convergents::lambda_estimate(&qi).max(0.2);
        ((16.0 / lam).floor() as usize).clamp(6, 24)
    });
    let k_lo = (k_hi / 3).max(2);
    let table = table_for(cfg, &CfTarget::Quadratic(qi.clone()), k_hi.max(qi.s() + 2 * qi.p()))?;
    let sp = spectral(&qi, &table)?;
    let mut reports = Vec::new();
    for c in [
        PowerExponent::Finite(0.5),
        PowerExponent::Finite(1.0),
        PowerExponent::Finite(2.0),
        PowerExponent::Finite(5.0),
        PowerExponent::Infinity,
    ] {
        reports.push(estimate_k(&qi, &table, c, k_lo, k_hi, cfg.chunk_size)?);
    }
    let checks = bound_suite(&reports, &sp);
    let refl = reflection_extremes_residual(reports.last().unwrap(), &table);
    let refl_tol = 1e-9 * cfg.tolerance_scale;
    let mut ok = refl < refl_tol;
    emit(cfg, "reflection max+min", refl, refl, refl_tol, ok,
        format!("bounds: reflection max+min residual {:e} [{}]", refl, if ok { "pass" } else { "FAIL" }));
    for b in &checks {
        emit(cfg, &b.name, b.lhs, b.lhs - b.rhs, b.rhs, b.pass,
            format!("bounds: {} lhs={:.6} rhs={:.6} [{}]", b.name, b.lhs, b.rhs, if b.pass { "pass" } else { "FAIL" }));
        ok &= b.pass;
    }
    Ok(ok)
}
