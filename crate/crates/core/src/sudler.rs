//! Log-domain streaming evaluation of Sudler products
//! `P_N = prod_{n<=N} |2 sin(pi n alpha)|` and the derived functionals
//! (power sums, extremes, the knot invariant `J` at roots of unity).
//!
//! Arguments `n alpha mod 1` are always reduced in integer arithmetic before
//! any floating-point rounding: exact residues `n a mod b` for rational
//! targets, and exact 128-bit fixed-point fractions for quadratic ones. Only
//! the final `log(2 sin(pi x))` is evaluated in double precision, where it is
//! well conditioned.
//!
//! Streams are computed in fixed-size chunks. Chunks may be evaluated in
//! parallel, but their partial results are composed in ascending order, so
//! the output is bit-identical for a fixed `chunk_size` regardless of the
//! number of workers.

use num_traits::ToPrimitive;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::cf::{QuadraticIrrational, Rational};
use crate::convergents::evaluate_surd;
use crate::error::{Error, Result};

pub const DEFAULT_CHUNK_SIZE: u64 = 65_536;

/// What a stream evaluates.
#[derive(Debug, Clone)]
pub enum SudlerTarget {
    Rational(Rational),
    /// Quadratic irrational evaluated at the given precision.
    Quadratic(QuadraticIrrational, u32),
}

impl SudlerTarget {
    fn resolve(&self) -> Result<Phase> {
        match self {
            SudlerTarget::Rational(r) => {
                let b = r
                    .denom()
                    .to_u64()
                    .ok_or_else(|| Error::Budget(format!("denominator {} too large to stream", r.denom())))?;
                let a = num_integer::Integer::mod_floor(r.numer(), r.denom())
                    .to_u64()
                    .expect("reduced residue fits once the denominator does");
                Ok(Phase::Rational { a, b })
            }
            SudlerTarget::Quadratic(qi, bits) => {
                let frac = evaluate_surd(qi, (*bits).max(192)).fract_u128();
                Ok(Phase::Quadratic { frac })
            }
        }
    }

    /// Exclusive upper bound on stream length for rational targets
    /// (`P_N(a/b) = 0` for `N >= b`).
    pub fn n_cap(&self) -> Option<u64> {
        match self {
            SudlerTarget::Rational(r) => r.denom().to_u64(),
            SudlerTarget::Quadratic(..) => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Rational { a: u64, b: u64 },
    Quadratic { frac: u128 },
}

impl Phase {
    /// `log |2 sin(pi n alpha)|`.
    #[inline]
    fn factor(&self, n: u64) -> f64 {
        match *self {
            Phase::Rational { a, b } => {
                let r = ((n as u128 * a as u128) % b as u128) as u64;
                debug_assert!(r != 0, "singular factor must be screened before streaming");
                let rr = r.min(b - r);
                log_two_sin_pi(rr as f64 / b as f64)
            }
            Phase::Quadratic { frac } => {
                let f = (n as u128).wrapping_mul(frac);
                let r = f.min(f.wrapping_neg());
                log_two_sin_pi(r as f64 * EXP2_NEG128)
            }
        }
    }
}

pub(crate) const EXP2_NEG128: f64 = 2.938735877055719e-39; // 2^-128

#[inline]
pub(crate) fn log_two_sin_pi(x: f64) -> f64 {
    (2.0 * (PI * x).sin()).ln()
}

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    s: f64,
    c: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Running log-sum-exp over a sequence of exponents.
#[derive(Debug, Clone, Copy)]
struct LogSumExp {
    m: f64,
    s: f64,
}

impl LogSumExp {
    fn empty() -> Self {
        LogSumExp { m: f64::NEG_INFINITY, s: 0.0 }
    }

    #[inline]
    fn push(&mut self, x: f64) {
        if x <= self.m {
            self.s += (x - self.m).exp();
        } else {
            self.s = self.s * (self.m - x).exp() + 1.0;
            self.m = x;
        }
    }

    fn merge_scaled(&mut self, m: f64, s: f64) {
        if s == 0.0 {
            return;
        }
        if m <= self.m {
            self.s += s * (m - self.m).exp();
        } else {
            self.s = self.s * (self.m - m).exp() + s;
            self.m = m;
        }
    }

    fn value(&self) -> f64 {
        self.m + self.s.ln()
    }
}

fn check_range(target: &SudlerTarget, n_max: u64) -> Result<Phase> {
    if let Some(cap) = target.n_cap() {
        if n_max >= cap {
            return Err(Error::SingularFactor { n: cap });
        }
    }
    target.resolve()
}

fn chunk_ranges(n_max: u64, chunk_size: u64) -> Vec<(u64, u64)> {
    let cs = chunk_size.max(1);
    let mut out = Vec::new();
    let mut lo = 1u64;
    while lo <= n_max {
        let hi = lo.saturating_add(cs - 1).min(n_max);
        out.push((lo, hi));
        lo = hi + 1;
    }
    out
}

/// Materialized prefix stream: `values[N] = log P_N` for `N = 0..=n_max`.
#[derive(Debug, Clone)]
pub struct LogProductStream {
    pub target: SudlerTarget,
    pub values: Vec<f64>,
    pub chunk_size: u64,
}

impl LogProductStream {
    pub fn n_max(&self) -> u64 {
        (self.values.len() - 1) as u64
    }
}

/// Compute the full prefix stream of `log P_N`.
pub fn sudler_stream(target: &SudlerTarget, n_max: u64, chunk_size: u64) -> Result<LogProductStream> {
    let phase = check_range(target, n_max)?;
    let ranges = chunk_ranges(n_max, chunk_size);

    let locals: Vec<Vec<f64>> = ranges
        .par_iter()
        .map(|&(lo, hi)| {
            let mut acc = Neumaier::default();
            let mut v = Vec::with_capacity((hi - lo + 1) as usize);
            for n in lo..=hi {
                acc.add(phase.factor(n));
                v.push(acc.value());
            }
            v
        })
        .collect();

    let mut values = Vec::with_capacity(n_max as usize + 1);
    values.push(0.0);
    let mut offset = Neumaier::default();
    for local in &locals {
        let o = offset.value();
        values.extend(local.iter().map(|&x| o + x));
        offset.add(*local.last().unwrap());
    }
    Ok(LogProductStream { target: target.clone(), values, chunk_size })
}

/// Summary statistics of a prefix stream, computed without materializing it.
#[derive(Debug, Clone)]
pub struct StreamFold {
    pub n_max: u64,
    /// `log P_{n_max}`.
    pub last: f64,
    pub log_max: f64,
    pub argmax: u64,
    pub log_min: f64,
    pub argmin: u64,
    /// `sum_{N=0}^{n_max} log P_N`.
    pub sum_log: f64,
    /// `(c, log sum_{N=0}^{n_max} P_N^c)` for each requested exponent.
    pub power_sums: Vec<(f64, f64)>,
}

struct ChunkStat {
    total: f64,
    max: (f64, u64),
    min: (f64, u64),
    sum_prefix: f64,
    len: u64,
    lse: Vec<LogSumExp>,
}

/// Fold the stream over `N = 0..=n_max`.
pub fn stream_fold(target: &SudlerTarget, n_max: u64, chunk_size: u64, cs: &[f64]) -> Result<StreamFold> {
    let phase = check_range(target, n_max)?;
    let ranges = chunk_ranges(n_max, chunk_size);

    let stats: Vec<ChunkStat> = ranges
        .par_iter()
        .map(|&(lo, hi)| {
            let mut acc = Neumaier::default();
            let mut max = (f64::NEG_INFINITY, 0u64);
            let mut min = (f64::INFINITY, 0u64);
            let mut sum_prefix = Neumaier::default();
            let mut lse: Vec<LogSumExp> = cs.iter().map(|_| LogSumExp::empty()).collect();
            for n in lo..=hi {
                acc.add(phase.factor(n));
                let v = acc.value();
                if v > max.0 {
                    max = (v, n);
                }
                if v < min.0 {
                    min = (v, n);
                }
                sum_prefix.add(v);
                for (j, &c) in cs.iter().enumerate() {
                    lse[j].push(c * v);
                }
            }
            ChunkStat { total: acc.value(), max, min, sum_prefix: sum_prefix.value(), len: hi - lo + 1, lse }
        })
        .collect();

    // seed with the empty product P_0 = 1
    let mut max = (0.0f64, 0u64);
    let mut min = (0.0f64, 0u64);
    let mut sum_log = Neumaier::default();
    let mut global_lse: Vec<LogSumExp> = cs.iter().map(|_| LogSumExp { m: 0.0, s: 1.0 }).collect();
    let mut offset = Neumaier::default();
    for st in &stats {
        let o = offset.value();
        if o + st.max.0 > max.0 {
            max = (o + st.max.0, st.max.1);
        }
        if o + st.min.0 < min.0 {
            min = (o + st.min.0, st.min.1);
        }
        sum_log.add(st.sum_prefix + st.len as f64 * o);
        for (j, &c) in cs.iter().enumerate() {
            global_lse[j].merge_scaled(st.lse[j].m + c * o, st.lse[j].s);
        }
        offset.add(st.total);
    }

    Ok(StreamFold {
        n_max,
        last: offset.value(),
        log_max: max.0,
        argmax: max.1,
        log_min: min.0,
        argmin: min.1,
        sum_log: sum_log.value(),
        power_sums: cs.iter().zip(global_lse.iter()).map(|(&c, l)| (c, l.value())).collect(),
    })
}

/// `log J(e(a/b)) = log sum_{N=0}^{b-1} P_N(a/b)^2`.
pub fn jones_f(x: &Rational, chunk_size: u64) -> Result<f64> {
    let b = x
        .denom()
        .to_u64()
        .ok_or_else(|| Error::Budget(format!("denominator {} too large", x.denom())))?;
    let fold = stream_fold(&SudlerTarget::Rational(x.clone()), b - 1, chunk_size, &[2.0])?;
    Ok(fold.power_sums[0].1)
}

/// `log (sum_{N=0}^{n_max} P_N^c)^{1/c}`.
pub fn power_sum(target: &SudlerTarget, c: f64, n_max: u64, chunk_size: u64) -> Result<f64> {
    if c.is_nan() || c <= 0.0 {
        return Err(Error::Domain("power-sum exponent must be positive".into()));
    }
    let fold = stream_fold(target, n_max, chunk_size, &[c])?;
    Ok(fold.power_sums[0].1 / c)
}

/// Extremes of `log P_N` over `0 <= N < b` for a rational target.
#[derive(Debug, Clone)]
pub struct ExtremeReport {
    pub log_max: f64,
    pub argmax: u64,
    pub log_min: f64,
    pub argmin: u64,
    /// `log b`: by the reflection identity, `log_max + log_min` equals this.
    pub log_b: f64,
}

pub fn extremes(x: &Rational, chunk_size: u64) -> Result<ExtremeReport> {
    let b = x
        .denom()
        .to_u64()
        .ok_or_else(|| Error::Budget(format!("denominator {} too large", x.denom())))?;
    if b < 2 {
        return Err(Error::Domain("extremes need b >= 2".into()));
    }
    let fold = stream_fold(&SudlerTarget::Rational(x.clone()), b - 1, chunk_size, &[])?;
    Ok(ExtremeReport {
        log_max: fold.log_max,
        argmax: fold.argmax,
        log_min: fold.log_min,
        argmin: fold.argmin,
        log_b: (b as f64).ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rational(a: i64, b: i64) -> SudlerTarget {
        SudlerTarget::Rational(Rational::from_i64(a, b).unwrap())
    }

    #[test]
    fn one_third_stream() {
        let s = sudler_stream(&rational(1, 3), 2, 64).unwrap();
        let sqrt3 = 3f64.sqrt();
        assert!(s.values[0] == 0.0);
        assert!((s.values[1] - sqrt3.ln()).abs() < 1e-15);
        assert!((s.values[2] - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn one_half_stream() {
        let s = sudler_stream(&rational(1, 2), 1, 64).unwrap();
        assert_eq!(s.values[0], 0.0);
        assert!((s.values[1] - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn empty_stream() {
        let s = sudler_stream(&rational(2, 5), 0, 64).unwrap();
        assert_eq!(s.values, vec![0.0]);
    }

    #[test]
    fn n_at_least_b_is_singular() {
        let err = sudler_stream(&rational(1, 3), 3, 64).unwrap_err();
        assert!(matches!(err, Error::SingularFactor { n: 3 }));
        assert!(stream_fold(&rational(1, 3), 5, 64, &[]).is_err());
    }

    #[test]
    fn jones_small_values() {
        // J(e(1/3)) = 1 + 3 + 9 = 13
        let j = jones_f(&Rational::from_i64(1, 3).unwrap(), 64).unwrap();
        assert!((j - 13f64.ln()).abs() < 1e-13);
        // J(e(1/1)) = 1
        let j = jones_f(&Rational::from_i64(1, 1).unwrap(), 64).unwrap();
        assert_eq!(j, 0.0);
        // J(e(1/2)) = 1 + 4 = 5
        let j = jones_f(&Rational::from_i64(1, 2).unwrap(), 64).unwrap();
        assert!((j - 5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn power_sum_examples() {
        let t = rational(1, 3);
        // c = 2 ties to jones
        let p2 = power_sum(&t, 2.0, 2, 64).unwrap();
        assert!((p2 - 13f64.ln() / 2.0).abs() < 1e-13);
        // c = 1: 1 + sqrt(3) + 3
        let p1 = power_sum(&t, 1.0, 2, 64).unwrap();
        assert!((p1 - (4.0 + 3f64.sqrt()).ln()).abs() < 1e-13);
        // large c approaches the max (from above, modulo rounding)
        let p100 = power_sum(&t, 100.0, 2, 64).unwrap();
        assert!((p100 - 3f64.ln()).abs() < 0.02);
        assert!(p100 >= 3f64.ln() - 1e-12);
    }

    #[test]
    fn extremes_small() {
        let e = extremes(&Rational::from_i64(1, 3).unwrap(), 64).unwrap();
        assert!((e.log_max - 3f64.ln()).abs() < 1e-14);
        assert_eq!(e.argmax, 2);
        assert_eq!(e.log_min, 0.0);
        assert_eq!(e.argmin, 0);
        let e = extremes(&Rational::from_i64(1, 2).unwrap(), 64).unwrap();
        assert!((e.log_max - 2f64.ln()).abs() < 1e-15);
        assert_eq!(e.log_min, 0.0);
    }

    #[test]
    fn last_term_equals_b() {
        for &(a, b) in &[(1i64, 7i64), (3, 8), (5, 97), (13, 1000)] {
            let f = stream_fold(&rational(a, b), (b - 1) as u64, 128, &[]).unwrap();
            assert!((f.last - (b as f64).ln()).abs() < 1e-11, "a/b = {a}/{b}");
        }
    }

    #[test]
    fn chunk_size_fixes_result_across_worker_counts() {
        let target = rational(214_741, 1_000_003);
        let reference = std::thread::spawn(move || {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            pool.install(|| stream_fold(&rational(214_741, 1_000_003), 1_000_002, 4096, &[2.0, 0.5]).unwrap())
        })
        .join()
        .unwrap();
        for workers in [2usize, 8] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
            let f = pool.install(|| stream_fold(&target, 1_000_002, 4096, &[2.0, 0.5]).unwrap());
            assert_eq!(f.last.to_bits(), reference.last.to_bits());
            assert_eq!(f.log_max.to_bits(), reference.log_max.to_bits());
            assert_eq!(f.argmax, reference.argmax);
            assert_eq!(f.sum_log.to_bits(), reference.sum_log.to_bits());
            for (a, b) in f.power_sums.iter().zip(reference.power_sums.iter()) {
                assert_eq!(a.1.to_bits(), b.1.to_bits());
            }
        }
    }

    #[test]
    fn fold_matches_materialized_stream() {
        let t = rational(355, 1131);
        let n = 1130u64;
        let s = sudler_stream(&t, n, 64).unwrap();
        let f = stream_fold(&t, n, 64, &[1.0]).unwrap();
        let max = s.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(f.log_max, max);
        assert!((f.last - s.values[n as usize]).abs() < 1e-12);
        let sum: f64 = s.values.iter().sum();
        assert!((f.sum_log - sum).abs() < 1e-9);
    }

    #[test]
    fn quadratic_target_stream() {
        // golden mean: first factors |2 sin(pi n phi)|
        let qi = QuadraticIrrational::new(vec![1], vec![1]).unwrap();
        let s = sudler_stream(&SudlerTarget::Quadratic(qi, 256), 10, 64).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let mut expect = 0.0;
        for n in 1..=10u64 {
            let x = (n as f64 * phi).rem_euclid(1.0);
            expect += (2.0 * (PI * x).sin()).abs().ln();
            assert!((s.values[n as usize] - expect).abs() < 1e-9, "n={n}");
        }
    }
}
