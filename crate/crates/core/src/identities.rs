//! Exact identities and bounds satisfied by the product sequence: the
//! reflection identity `log P_N + log P_{b-N-1} = log b`, the average-log
//! identity, cotangent-sum bounds, the rational/irrational transfer bound,
//! polynomial growth exponents, and the difference sequence of `log J` along
//! convergents.

use num_traits::ToPrimitive;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::cf::{cf_of_rational, QuadraticIrrational, Rational};
use crate::convergents::ConvergentTable;
use crate::error::{Error, Result};
use crate::sudler::{jones_f, log_two_sin_pi, stream_fold, sudler_stream, LogProductStream, Neumaier, SudlerTarget};

/// `log |2 sin(pi x)|` for a real argument.
pub fn log_sin_factor(x: f64) -> Result<f64> {
    let f = x.rem_euclid(1.0);
    if f == 0.0 {
        return Err(Error::SingularFactor { n: 0 });
    }
    Ok(log_two_sin_pi(f.min(1.0 - f)))
}

/// `log |2 sin(pi n a/b)|` with the residue `n a mod b` reduced in integer
/// arithmetic before any rounding.
pub fn log_sin_factor_rational(n: u64, x: &Rational) -> Result<f64> {
    let b = x.denom().to_u64().ok_or_else(|| Error::Budget("denominator too large".into()))?;
    let a = num_integer::Integer::mod_floor(x.numer(), x.denom()).to_u64().unwrap();
    let r = ((n as u128 * a as u128) % b as u128) as u64;
    if r == 0 {
        return Err(Error::SingularFactor { n });
    }
    Ok(log_two_sin_pi(r.min(b - r) as f64 / b as f64))
}

fn denom_u64(x: &Rational) -> Result<u64> {
    x.denom().to_u64().ok_or_else(|| Error::Budget("denominator too large".into()))
}

/// `log P_N(a/b) + log P_{b-N-1}(a/b) - log b` (zero in exact arithmetic).
pub fn reflection_check(x: &Rational, n: u64, chunk_size: u64) -> Result<f64> {
    let b = denom_u64(x)?;
    if n >= b {
        return Err(Error::Range(format!("N = {n} out of range for b = {b}")));
    }
    let s = sudler_stream(&SudlerTarget::Rational(x.clone()), b - 1, chunk_size)?;
    Ok(reflection_residual(&s, n))
}

fn reflection_residual(s: &LogProductStream, n: u64) -> f64 {
    let b = s.n_max() + 1;
    let log_b = (b as f64).ln();
    s.values[n as usize] + s.values[(b - 1 - n) as usize] - log_b
}

/// Largest reflection residual over all `0 <= N < b`.
pub fn reflection_max_residual(s: &LogProductStream) -> f64 {
    let b = s.n_max() + 1;
    (0..b).map(|n| reflection_residual(s, n).abs()).fold(0.0, f64::max)
}

/// `(1/b) sum_N log P_N(a/b) - (log b)/2` (zero in exact arithmetic).
pub fn average_log_check(x: &Rational, chunk_size: u64) -> Result<f64> {
    let b = denom_u64(x)?;
    let fold = stream_fold(&SudlerTarget::Rational(x.clone()), b - 1, chunk_size, &[])?;
    Ok(fold.sum_log / b as f64 - (b as f64).ln() / 2.0)
}

#[derive(Debug, Clone)]
pub struct CotangentReport {
    pub sum: f64,
    /// `(124 + 24 log A) q`.
    pub bound: f64,
    pub a_big: f64,
    pub q: f64,
    pub within_bound: bool,
}

fn cot_bound(a_big: f64, q: f64) -> f64 {
    (124.0 + 24.0 * a_big.ln()) * q
}

/// `cot(pi r/b)` with the argument folded into `(0, 1/2]` first.
#[inline]
fn cot_pi_ratio(r: u64, b: u64) -> f64 {
    if r <= b - r {
        1.0 / (PI * (r as f64 / b as f64)).tan()
    } else {
        -1.0 / (PI * ((b - r) as f64 / b as f64)).tan()
    }
}

/// `cot(pi x)` from a 128-bit fraction, folded into `(0, 1/2]`.
#[inline]
fn cot_pi_frac(f: u128) -> f64 {
    let r = f.min(f.wrapping_neg());
    let x = r as f64 * crate::sudler::EXP2_NEG128;
    let c = 1.0 / (PI * x).tan();
    if f > r { -c } else { c }
}

/// `sum_{n=1}^{N} cot(pi n a/b)` for a rational target, with its bound.
pub fn cotangent_sum_rational(x: &Rational, n_max: u64) -> Result<CotangentReport> {
    let b = denom_u64(x)?;
    if n_max >= b {
        return Err(Error::Range(format!("N = {n_max} out of range for b = {b}")));
    }
    let a = num_integer::Integer::mod_floor(x.numer(), x.denom()).to_u64().unwrap();
    let mut acc = Neumaier::default();
    let mut r = 0u128;
    for n in 1..=n_max {
        r += a as u128;
        if r >= b as u128 {
            r -= b as u128;
        }
        if r == 0 {
            return Err(Error::SingularFactor { n });
        }
        acc.add(cot_pi_ratio(r as u64, b));
    }
    let digits = cf_of_rational(x);
    let a_big = 1.0
        + digits[1..]
            .iter()
            .map(|d| d.to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0f64, f64::max);
    let sum = acc.value();
    let bound = cot_bound(a_big, b as f64);
    Ok(CotangentReport { sum, bound, a_big, q: b as f64, within_bound: sum.abs() <= bound })
}

/// Maximum of `|sum_{n<=N} cot(pi n a/b)| / bound` over all `N < b`.
pub fn cotangent_sweep_rational(x: &Rational) -> Result<(f64, u64)> {
    let b = denom_u64(x)?;
    let a = num_integer::Integer::mod_floor(x.numer(), x.denom()).to_u64().unwrap();
    let digits = cf_of_rational(x);
    let a_big = 1.0
        + digits[1..]
            .iter()
            .map(|d| d.to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0f64, f64::max);
    let bound = cot_bound(a_big, b as f64);
    let mut acc = Neumaier::default();
    let mut worst = (0.0f64, 0u64);
    let mut r = 0u128;
    for n in 1..b {
        r += a as u128;
        if r >= b as u128 {
            r -= b as u128;
        }
        acc.add(cot_pi_ratio(r as u64, b));
        let ratio = acc.value().abs() / bound;
        if ratio > worst.0 {
            worst = (ratio, n);
        }
    }
    Ok(worst)
}

/// `sum_{n=1}^{N} cot(pi n alpha)` for the quadratic target of a table, with
/// the bound at the stated index `k` (requires `N < q_k`).
pub fn cotangent_sum_quadratic(table: &ConvergentTable, k: usize, n_max: u64) -> Result<CotangentReport> {
    if table.quadratic().is_none() {
        return Err(Error::Domain("cotangent_sum_quadratic needs a quadratic table".into()));
    }
    let q_k = table.entries[k].q.to_f64().unwrap_or(f64::INFINITY);
    if n_max as f64 >= q_k {
        return Err(Error::Range(format!("N = {n_max} not below q_{k}")));
    }
    let frac = table.alpha_fixed.fract_u128();
    let mut acc = Neumaier::default();
    for n in 1..=n_max {
        let f = (n as u128).wrapping_mul(frac);
        acc.add(cot_pi_frac(f));
    }
    let a_big = table.a_big(k);
    let sum = acc.value();
    let bound = cot_bound(a_big, q_k);
    Ok(CotangentReport { sum, bound, a_big, q: q_k, within_bound: sum.abs() <= bound })
}

#[derive(Debug, Clone)]
pub struct TransferCheck {
    pub residual: f64,
    /// `log A_k / a_{k+1}`.
    pub bound: f64,
    pub ratio: f64,
}

/// `log P_N(alpha) - log P_N(p_k/q_k)` against the transfer bound.
pub fn transfer_check(table: &ConvergentTable, k: usize, n: u64) -> Result<TransferCheck> {
    let qi = table
        .quadratic()
        .ok_or_else(|| Error::Domain("transfer_check needs a quadratic table".into()))?;
    let q_k = table.entries[k]
        .q
        .to_u64()
        .ok_or_else(|| Error::Budget("q_k too large to stream".into()))?;
    if n >= q_k {
        return Err(Error::Range(format!("N = {n} not below q_{k}")));
    }
    let conv = Rational::new(table.entries[k].p.clone(), table.entries[k].q.clone())?;
    let bound = transfer_bound(table, k);
    if n == 0 {
        return Ok(TransferCheck { residual: 0.0, bound, ratio: 0.0 });
    }
    let cs = crate::sudler::DEFAULT_CHUNK_SIZE;
    let ia = stream_fold(&SudlerTarget::Quadratic(qi.clone(), table.precision_bits), n, cs, &[])?;
    let ir = stream_fold(&SudlerTarget::Rational(conv), n, cs, &[])?;
    let residual = ia.last - ir.last;
    Ok(TransferCheck { residual, bound, ratio: residual.abs() / bound })
}

/// `log A_k / a_{k+1}`.
pub fn transfer_bound(table: &ConvergentTable, k: usize) -> f64 {
    let a_next = table.digit(k + 1).map(|a| a.to_f64().unwrap_or(f64::INFINITY)).unwrap_or(1.0);
    table.a_big(k).ln() / a_next
}

#[derive(Debug, Clone)]
pub struct TransferSweep {
    pub k: usize,
    pub q_k: u64,
    pub max_abs_residual: f64,
    pub arg_n: u64,
    pub bound: f64,
    pub ratio: f64,
}

/// Sup over `0 <= N < q_k` of `|log P_N(alpha) - log P_N(p_k/q_k)|`.
///
/// Two chunked passes: the first collects per-chunk totals of both streams,
/// the second re-walks each chunk knowing its incoming offsets and tracks the
/// supremum. Memory stays O(chunks) and the result is independent of the
/// worker count.
pub fn transfer_sweep(table: &ConvergentTable, k: usize, chunk_size: u64) -> Result<TransferSweep> {
    if table.quadratic().is_none() {
        return Err(Error::Domain("transfer_sweep needs a quadratic table".into()));
    }
    let q_k = table.entries[k]
        .q
        .to_u64()
        .ok_or_else(|| Error::Budget("q_k too large to stream".into()))?;
    if q_k > 200_000_000 {
        return Err(Error::Budget(format!("transfer sweep at k={k} would stream {q_k} factors twice")));
    }
    let bound = transfer_bound(table, k);
    if q_k <= 1 {
        return Ok(TransferSweep { k, q_k, max_abs_residual: 0.0, arg_n: 0, bound, ratio: 0.0 });
    }

    let frac = table.alpha_fixed.fract_u128();
    let b = q_k;
    let a = num_integer::Integer::mod_floor(&table.entries[k].p, &table.entries[k].q).to_u64().unwrap();

    let cs = chunk_size.max(1);
    let mut ranges: Vec<(u64, u64)> = Vec::new();
    let mut lo = 1u64;
    while lo < b {
        ranges.push((lo, lo.saturating_add(cs - 1).min(b - 1)));
        lo = ranges.last().unwrap().1 + 1;
    }

    let walk = |lo: u64, hi: u64, mut visit: Option<&mut dyn FnMut(u64, f64, f64)>| -> (f64, f64) {
        let mut sa = Neumaier::default();
        let mut sr = Neumaier::default();
        for n in lo..=hi {
            let f = (n as u128).wrapping_mul(frac);
            let fa = f.min(f.wrapping_neg()) as f64 * crate::sudler::EXP2_NEG128;
            sa.add(log_two_sin_pi(fa));
            let r = ((n as u128 * a as u128) % b as u128) as u64;
            sr.add(log_two_sin_pi(r.min(b - r) as f64 / b as f64));
            if let Some(v) = visit.as_deref_mut() {
                v(n, sa.value(), sr.value());
            }
        }
        (sa.value(), sr.value())
    };

    let totals: Vec<(f64, f64)> = ranges.par_iter().map(|&(lo, hi)| walk(lo, hi, None)).collect();
    let mut shifts = Vec::with_capacity(ranges.len());
    let (mut oa, mut or) = (Neumaier::default(), Neumaier::default());
    for &(da, dr) in &totals {
        shifts.push(oa.value() - or.value());
        oa.add(da);
        or.add(dr);
    }

    let maxima: Vec<(f64, u64)> = ranges
        .par_iter()
        .zip(shifts.par_iter())
        .map(|(&(lo, hi), &shift)| {
            let mut best = (0.0f64, lo);
            walk(
                lo,
                hi,
                Some(&mut |n, va, vr| {
                    let d = (shift + (va - vr)).abs();
                    if d > best.0 {
                        best = (d, n);
                    }
                }),
            );
            best
        })
        .collect();

    let mut exact = (0.0f64, 0u64);
    for m in maxima {
        if m.0 > exact.0 {
            exact = m;
        }
    }

    Ok(TransferSweep {
        k,
        q_k,
        max_abs_residual: exact.0,
        arg_n: exact.1,
        bound,
        ratio: exact.0 / bound,
    })
}

/// Polynomial growth/decay exponents `c2 = K_inf / lambda`, `c1 = c2 - 1`.
pub fn lubinsky_exponents(k_inf: f64, lambda: f64) -> Result<(f64, f64)> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Domain("lambda must be positive".into()));
    }
    if k_inf < lambda {
        return Err(Error::Domain(format!(
            "K_inf = {k_inf} below lambda = {lambda}; the trivial lower bound rules this out"
        )));
    }
    let c2 = k_inf / lambda;
    Ok((c2 - 1.0, c2))
}

/// Successive differences of `log J` along the convergents of `[0; (a)]`,
/// together with the running Cesaro means.
#[derive(Debug, Clone)]
pub struct HSequence {
    /// `log J(e(p_k/q_k))` for `k = 0..=k_max`.
    pub log_j: Vec<f64>,
    /// `h_k = log J_k - log J_{k-1}` for `k = 1..=k_max`.
    pub h: Vec<f64>,
    /// `cesaro[K-1] = (1/K) sum_{k<=K} h_k`.
    pub cesaro: Vec<f64>,
}

pub fn h_sequence(alpha: &QuadraticIrrational, k_max: usize, chunk_size: u64) -> Result<HSequence> {
    if alpha.pre_period() != [0] || alpha.p() != 1 {
        return Err(Error::Domain(
            "the difference identity for h applies to expansions of the form [0; (a)]".into(),
        ));
    }
    let table = ConvergentTable::build_quadratic(alpha, k_max, crate::convergents::default_precision_bits(alpha, k_max))?;
    let mut log_j = Vec::with_capacity(k_max + 1);
    for e in &table.entries {
        let conv = Rational::new(e.p.clone(), e.q.clone())?;
        log_j.push(jones_f(&conv, chunk_size)?);
    }
    let h: Vec<f64> = (1..=k_max).map(|k| log_j[k] - log_j[k - 1]).collect();
    let mut cesaro = Vec::with_capacity(k_max);
    let mut acc = 0.0;
    for (i, &v) in h.iter().enumerate() {
        acc += v;
        cesaro.push(acc / (i + 1) as f64);
    }
    Ok(HSequence { log_j, h, cesaro })
}

/// `h_k` for a single index.
pub fn zagier_h(alpha: &QuadraticIrrational, k: usize, chunk_size: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Range("h is defined for k >= 1".into()));
    }
    let seq = h_sequence(alpha, k, chunk_size)?;
    Ok(seq.h[k - 1])
}
