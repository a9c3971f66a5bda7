//! Perturbed products `P_{q_k}(alpha, x)`, their factorization over the
//! Ostrowski digits of `N`, and the limit functions
//!
//! ```text
//! G_r(alpha, x) = 2 pi |x + B_r| prod_{n>=1} |(1 - B_r ({n alpha_r} - 1/2)/n)^2 - (x + B_r/2)^2 / n^2|
//! ```
//!
//! with `B_r = C_r E_r` and `alpha_r` the reversed, rotated period. The
//! infinite product is truncated with an empirically calibrated tail
//! certificate of shape `C log(n)/n`.

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::cf::QuadraticIrrational;
use crate::convergents::{evaluate_surd, ConvergentTable};
use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::ostrowski::{encode, epsilon, OstrowskiExpansion};
use crate::spectral::SpectralData;
use crate::sudler::{stream_fold, Neumaier, SudlerTarget};

use crate::sudler::EXP2_NEG128;

/// `log P_{q_k}(alpha, x) = log prod_{n=1}^{q_k} |2 sin(pi (n alpha + (-1)^k x / q_k))|`.
///
/// The shifted argument is reduced at the table precision before the
/// double-precision log factor is taken.
pub fn perturbed_product_log(table: &ConvergentTable, k: usize, x: f64) -> Result<f64> {
    if table.quadratic().is_none() {
        return Err(Error::Domain("perturbed products need a quadratic table".into()));
    }
    if k > table.k_max() {
        return Err(Error::Range(format!("k = {k} beyond table depth")));
    }
    let bits = table.precision_bits;
    let q_k = table.entries[k]
        .q
        .to_u64()
        .ok_or_else(|| Error::Budget("q_k too large for a perturbed product".into()))?;
    if q_k > 10_000_000 {
        return Err(Error::Budget(format!("perturbed product with {q_k} factors is out of budget")));
    }
    let shift = {
        let t = Fixed::from_f64(x, bits).div_int(&table.entries[k].q);
        if k % 2 == 0 {
            t
        } else {
            t.neg()
        }
    };
    let alpha_frac = table.alpha_fixed.fract();

    let mut acc = Neumaier::default();
    for n in 1..=q_k {
        let arg = alpha_frac.mul_int(&BigInt::from(n)).add(&shift).fract();
        if arg.is_zero() {
            return Err(Error::SingularFactor { n });
        }
        let f = arg.fract_u128();
        let r = f.min(f.wrapping_neg());
        if r == 0 {
            return Err(Error::SingularFactor { n });
        }
        acc.add(crate::sudler::log_two_sin_pi(r as f64 * EXP2_NEG128));
    }
    Ok(acc.value())
}

/// Residual of the digit factorization
/// `log P_N(alpha) - sum_{k} sum_{b < b_k} log P_{q_k}(alpha, b q_k delta_k + epsilon_k(N))`.
pub fn ostrowski_factorization_check(table: &ConvergentTable, n: &BigUint) -> Result<f64> {
    let qi = table
        .quadratic()
        .ok_or_else(|| Error::Domain("factorization check needs a quadratic table".into()))?;
    let exp = encode(table, n)?;
    let n_u64 = n
        .to_u64()
        .ok_or_else(|| Error::Budget("N too large for a direct stream".into()))?;
    let lhs = if n_u64 == 0 {
        0.0
    } else {
        stream_fold(&SudlerTarget::Quadratic(qi.clone(), table.precision_bits), n_u64, 1 << 16, &[])?.last
    };
    let mut rhs = 0.0;
    for (k, &bk) in exp.digits.iter().enumerate() {
        if bk == 0 {
            continue;
        }
        let qd = table.entries[k].q.to_f64().unwrap() * table.entries[k].delta_f64();
        let eps = epsilon(table, k, &exp)?.to_f64();
        for b in 0..bk {
            rhs += perturbed_product_log(table, k, b as f64 * qd + eps)?;
        }
    }
    Ok(lhs - rhs)
}

/// Max factorization residual over every `N < q_{k_top}`, in one pass.
///
/// Walks the tree of valid digit vectors from the top index down, so the
/// perturbed products belonging to a common digit tail are evaluated once
/// instead of once per `N`; the total work is `O(p q_{k_top})` factor
/// evaluations rather than the `O(q_{k_top}^2)` of a per-`N` sweep.
pub fn factorization_sweep(table: &ConvergentTable, k_top: usize) -> Result<f64> {
    if table.quadratic().is_none() {
        return Err(Error::Domain("factorization sweep needs a quadratic table".into()));
    }
    if k_top == 0 || k_top > table.k_max() {
        return Err(Error::Range(format!("k_top = {k_top} out of table range")));
    }
    let q_top = table.entries[k_top]
        .q
        .to_u64()
        .ok_or_else(|| Error::Budget("q_{k_top} too large for an exhaustive sweep".into()))?;
    if q_top > 100_000_000 {
        return Err(Error::Budget(format!("exhaustive sweep below q_{k_top} = {q_top} is out of budget")));
    }

    let qs: Vec<u64> = (0..k_top).map(|k| table.entries[k].q.to_u64().unwrap()).collect();
    let delta: Vec<f64> = (0..k_top).map(|k| table.entries[k].delta_f64()).collect();
    let qd: Vec<f64> = (0..k_top).map(|k| qs[k] as f64 * delta[k]).collect();
    let bounds: Vec<u64> = (0..k_top)
        .map(|k| table.digit(k + 1).and_then(|a| a.to_u64().ok_or_else(|| Error::Range("digit overflow".into()))))
        .collect::<Result<_>>()?;

    // exact 128-bit fractions of n*alpha for both sides of the identity
    let alpha_frac = table.alpha_fixed.fract_u128();
    let fracs: Vec<u128> = (1..=q_top).map(|n| (n as u128).wrapping_mul(alpha_frac)).collect();

    let mut values = Vec::with_capacity(q_top as usize);
    values.push(0.0f64);
    let mut acc = Neumaier::default();
    for f in fracs.iter().take(q_top as usize - 1) {
        let r = (*f).min(f.wrapping_neg());
        acc.add(crate::sudler::log_two_sin_pi(r as f64 * EXP2_NEG128));
        values.push(acc.value());
    }

    let pert = |k: usize, x: f64| -> f64 {
        let v = x / qs[k] as f64;
        let mag = (v.abs() * 2f64.powi(128)) as u128;
        let shift = if (v < 0.0) != (k % 2 == 1) { mag.wrapping_neg() } else { mag };
        let mut s = Neumaier::default();
        for f in &fracs[..qs[k] as usize] {
            let a = f.wrapping_add(shift);
            let r = a.min(a.wrapping_neg());
            s.add(crate::sudler::log_two_sin_pi(r as f64 * EXP2_NEG128));
        }
        s.value()
    };

    let mut worst = 0.0f64;
    // depth-first over the valid digit vectors (b_{k_top-1}, ..., b_0)
    #[allow(clippy::too_many_arguments)]
    fn descend(
        k: usize,
        forced_zero: bool,
        n_acc: u64,
        tail: f64,
        rhs: f64,
        qs: &[u64],
        delta: &[f64],
        qd: &[f64],
        bounds: &[u64],
        values: &[f64],
        pert: &dyn Fn(usize, f64) -> f64,
        worst: &mut f64,
    ) {
        let cap = if forced_zero {
            0
        } else if k == 0 {
            bounds[0] - 1
        } else {
            bounds[k]
        };
        let eps = qs[k] as f64 * if k % 2 == 0 { tail } else { -tail };
        let mut rhs_here = rhs;
        for b in 0..=cap {
            if b > 0 {
                rhs_here += pert(k, (b - 1) as f64 * qd[k] + eps);
            }
            let n_next = n_acc + b * qs[k];
            let tail_next = tail + if k % 2 == 0 { b as f64 * delta[k] } else { -(b as f64) * delta[k] };
            if k == 0 {
                let r = (values[n_next as usize] - rhs_here).abs();
                if r > *worst {
                    *worst = r;
                }
            } else {
                descend(
                    k - 1,
                    b == bounds[k],
                    n_next,
                    tail_next,
                    rhs_here,
                    qs,
                    delta,
                    qd,
                    bounds,
                    values,
                    pert,
                    worst,
                );
            }
        }
    }
    descend(k_top - 1, false, 0, 0.0, 0.0, &qs, &delta, &qd, &bounds, &values, &pert, &mut worst);
    Ok(worst)
}

/// The compact interval `I_r = [-(1 - kappa/2) B_r, (a_{s+r+1} - kappa/2) B_r]`
/// on which the limit function is bounded away from zero.
#[derive(Debug, Clone)]
pub struct IntervalSpec {
    pub r: usize,
    pub lo: f64,
    pub hi: f64,
    /// Smallest tabled `k0` such that for every tabled `k >= k0` in residue
    /// class `r` the digit range lands inside `I_r`; `None` when the table is
    /// too shallow to exhibit one.
    pub k0: Option<usize>,
}

/// Build `I_r` and scan the table for the empirical `k0`.
pub fn interval_spec(table: &ConvergentTable, sp: &SpectralData, r: usize) -> Result<IntervalSpec> {
    let qi = table
        .quadratic()
        .ok_or_else(|| Error::Domain("interval spec needs a quadratic table".into()))?;
    if r < 1 || r > sp.p {
        return Err(Error::Range(format!("residue class {r} out of 1..={}", sp.p)));
    }
    let b_r = sp.b_f64(r);
    let kappa = sp.kappa;
    let a_next = qi.digit(sp.s + r + 1) as f64;
    let lo = -(1.0 - kappa / 2.0) * b_r;
    let hi = (a_next - kappa / 2.0) * b_r;

    // scan: b q_k delta_k +/- (1 - kappa) q_k delta_k must land in I_r for
    // all digits 0 <= b < a_{k+1}
    let mut last_fail = sp.s; // k0 must exceed s
    let mut any_pass = false;
    for k in (sp.s + 1)..table.k_max() {
        if qi.residue_class(k) != r {
            continue;
        }
        let qd = table.entries[k].q.to_f64().unwrap_or(f64::INFINITY) * table.entries[k].delta_f64();
        let spread = (1.0 - kappa) * qd;
        let a_k1 = qi.digit(k + 1) as f64;
        let ok = (-spread >= lo) && ((a_k1 - 1.0) * qd + spread <= hi);
        if ok {
            any_pass = true;
        } else {
            last_fail = k;
            any_pass = false;
        }
    }
    let k0 = if any_pass { Some(last_fail + 1) } else { None };
    Ok(IntervalSpec { r, lo, hi, k0 })
}

/// `max_r k0`, the global index past which every digit contribution lands in
/// its interval.
pub fn global_k0(table: &ConvergentTable, sp: &SpectralData) -> Result<Option<usize>> {
    let mut k0 = 0usize;
    for r in 1..=sp.p {
        match interval_spec(table, sp, r)?.k0 {
            Some(k) => k0 = k0.max(k),
            None => return Ok(None),
        }
    }
    Ok(Some(k0))
}

pub const N_TRUNC_CAP: u64 = 1 << 24;
pub const DEFAULT_N_TRUNC: u64 = 1 << 16;
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

/// A truncation-certified evaluator for one limit function `G_r`.
#[derive(Debug, Clone)]
pub struct LimitFunctionSpec {
    pub r: usize,
    pub b_r: f64,
    pub alpha_r: QuadraticIrrational,
    pub n_trunc: u64,
    pub tail_tolerance: f64,
    /// Calibrated constant of the `C log(n)/n` tail certificate.
    pub tail_constant: f64,
    /// `u[n-1] = B_r ({n alpha_r} - 1/2) / n`.
    u: Vec<f64>,
}

fn u_values(b_r: f64, alpha_r_frac: u128, n: u64) -> Vec<f64> {
    (1..=n)
        .into_par_iter()
        .map(|i| {
            let f = (i as u128).wrapping_mul(alpha_r_frac);
            let frac = f as f64 * EXP2_NEG128;
            b_r * (frac - 0.5) / i as f64
        })
        .collect()
}

/// Log of the truncated product over `lo..=hi` (1-based factor indices).
fn tail_log(u: &[f64], sq: f64, lo: u64, hi: u64) -> f64 {
    let mut acc = Neumaier::default();
    for i in lo..=hi {
        let un = u[(i - 1) as usize];
        let inv = 1.0 / (i as f64 * i as f64);
        acc.add(((1.0 - un) * (1.0 - un) - sq * inv).abs().ln());
    }
    acc.value()
}

/// Build the evaluator for residue class `r`, calibrating the tail constant
/// and (if needed) raising `n_trunc` until the certificate meets
/// `tail_tolerance`. Fails if that requires more than [`N_TRUNC_CAP`] factors.
pub fn build_limit_spec(
    table: &ConvergentTable,
    sp: &SpectralData,
    r: usize,
    n_trunc: u64,
    tail_tolerance: f64,
) -> Result<LimitFunctionSpec> {
    let iv = interval_spec(table, sp, r)?;
    let b_r = sp.b_f64(r);
    let alpha_r = sp.alpha_rev[r - 1].clone();
    let frac = evaluate_surd(&alpha_r, 192).fract_u128();

    let cal_top = 1u64 << 16;
    let mut u = u_values(b_r, frac, cal_top.max(n_trunc.min(N_TRUNC_CAP)));

    // calibrate: largest observed |log prod_{N1..4N1}| * N1 / log N1 over
    // dyadic N1, at a handful of x across I_r, inflated by 2
    let mut c_obs: f64 = 0.0;
    for &x in &[0.0, iv.lo, iv.hi, iv.lo / 2.0, iv.hi / 2.0, -b_r] {
        let sq = (x + b_r / 2.0) * (x + b_r / 2.0);
        for e in 6..=14u32 {
            let n1 = 1u64 << e;
            let t = tail_log(&u, sq, n1, 4 * n1);
            c_obs = c_obs.max(t.abs() * n1 as f64 / (n1 as f64).ln());
        }
    }
    let tail_constant = 2.0 * c_obs;

    let tail_rel = |n: u64| tail_constant * (n as f64).ln() / n as f64;
    let mut n_eff = n_trunc.max(2);
    while tail_rel(n_eff) > tail_tolerance {
        if n_eff >= N_TRUNC_CAP {
            return Err(Error::TailToleranceUnreachable { tolerance: tail_tolerance, cap: N_TRUNC_CAP });
        }
        n_eff = (n_eff * 2).min(N_TRUNC_CAP);
    }
    if n_eff as usize > u.len() {
        u = u_values(b_r, frac, n_eff);
    }
    u.truncate(n_eff as usize);

    Ok(LimitFunctionSpec { r, b_r, alpha_r, n_trunc: n_eff, tail_tolerance, tail_constant, u })
}

/// Value of `G_r` at `x` together with a certified absolute tail bound:
/// the untruncated value lies within `value +/- tail_bound`.
pub fn limit_g(spec: &LimitFunctionSpec, x: f64) -> (f64, f64) {
    let pref = 2.0 * PI * (x + spec.b_r).abs();
    if pref == 0.0 {
        return (0.0, 0.0);
    }
    let sq = (x + spec.b_r / 2.0) * (x + spec.b_r / 2.0);
    let mut acc = Neumaier::default();
    for (i, &un) in spec.u.iter().enumerate() {
        let n = (i + 1) as f64;
        let f = ((1.0 - un) * (1.0 - un) - sq / (n * n)).abs();
        if f == 0.0 {
            return (0.0, 0.0);
        }
        acc.add(f.ln());
    }
    let value = pref * acc.value().exp();
    let rel = spec.tail_constant * (spec.n_trunc as f64).ln() / spec.n_trunc as f64;
    (value, rel * value.abs())
}

/// `log G_N(alpha) = sum_{k >= k0} sum_{b < b_k} log G_{[k]}(b q_k delta_k + epsilon_k(N))`.
///
/// `specs` must hold one evaluator per residue class, indexed `r - 1`;
/// `k0` must be at least the empirical `k0` reported by [`interval_spec`].
pub fn g_n_product_log(
    table: &ConvergentTable,
    _sp: &SpectralData,
    specs: &[LimitFunctionSpec],
    n: &BigUint,
    k0: usize,
) -> Result<f64> {
    let qi = table
        .quadratic()
        .ok_or_else(|| Error::Domain("G_N needs a quadratic table".into()))?;
    let exp: OstrowskiExpansion = encode(table, n)?;
    let mut acc = 0.0;
    for (k, &bk) in exp.digits.iter().enumerate() {
        if bk == 0 || k < k0 {
            continue;
        }
        let r = qi.residue_class(k);
        let spec = &specs[r - 1];
        let qd = table.entries[k].q.to_f64().unwrap() * table.entries[k].delta_f64();
        let eps = epsilon(table, k, &exp)?.to_f64();
        for b in 0..bk {
            let (g, _) = limit_g(spec, b as f64 * qd + eps);
            if g <= 0.0 {
                return Err(Error::Domain(format!("G_{r} vanished inside its interval at k={k}")));
            }
            acc += g.ln();
        }
    }
    Ok(acc)
}

/// One row of a convergence table: sup over a grid of
/// `|P_{q_k}(alpha, x) - G_r(alpha, x)|` against the proven rate envelope.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub m: usize,
    pub k: usize,
    pub q_k: f64,
    pub sup_error: f64,
    /// `q_k^{-1/2} log^{3/4} q_k`.
    pub rate_envelope: f64,
}

/// Sweep `m` over `m_range` for residue class `r`, measuring the sup distance
/// between the perturbed product and its limit on `x_grid`.
pub fn convergence_report(
    table: &ConvergentTable,
    sp: &SpectralData,
    spec: &LimitFunctionSpec,
    m_range: std::ops::RangeInclusive<usize>,
    x_grid: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    let r = spec.r;
    let g: Vec<f64> = x_grid.par_iter().map(|&x| limit_g(spec, x).0).collect();
    let mut rows = Vec::new();
    for m in m_range {
        let k = sp.s + m * sp.p + r;
        if k > table.k_max() {
            return Err(Error::Range(format!("m = {m} needs table index {k}")));
        }
        let sup = x_grid
            .par_iter()
            .zip(g.par_iter())
            .map(|(&x, &gx)| {
                let p = perturbed_product_log(table, k, x).map(f64::exp)?;
                Ok((p - gx).abs())
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
        let q_k = table.entries[k].q.to_f64().unwrap();
        rows.push(ConvergenceRow {
            m,
            k,
            q_k,
            sup_error: sup,
            rate_envelope: q_k.powf(-0.5) * q_k.ln().powf(0.75),
        });
    }
    Ok(rows)
}
