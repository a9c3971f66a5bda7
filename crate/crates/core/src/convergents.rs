//! Convergents `p_k/q_k`, the signed errors `delta_k = (-1)^k (q_k alpha - p_k)`,
//! and exact evaluation of quadratic irrationals.
//!
//! `alpha` is evaluated once, exactly, as an element of its quadratic field;
//! every `delta_k` is then `|q_k alpha - p_k|` at the table precision. This
//! confines rounding loss to the final conversion instead of accumulating
//! it through the `delta` recursion.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::cf::{cf_of_rational, CfTarget, QuadraticIrrational};
use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::surd::QuadExt;

/// Exact value of a table's target.
#[derive(Debug, Clone)]
pub enum AlphaExact {
    Rational(BigRational),
    Quadratic(QuadExt),
}

impl AlphaExact {
    pub fn to_fixed(&self, bits: u32) -> Fixed {
        match self {
            AlphaExact::Rational(r) => Fixed::from_ratio(r.numer(), r.denom(), bits),
            AlphaExact::Quadratic(s) => s.to_fixed(bits),
        }
    }

    pub fn as_quadext(&self) -> Option<&QuadExt> {
        match self {
            AlphaExact::Quadratic(s) => Some(s),
            AlphaExact::Rational(_) => None,
        }
    }
}

/// One row of a [`ConvergentTable`].
#[derive(Debug, Clone)]
pub struct Convergent {
    pub a: BigInt,
    pub p: BigInt,
    pub q: BigInt,
    /// `(-1)^k (q_k alpha - p_k)`, positive for every `k` below the final
    /// index (and zero at the final index of a rational expansion).
    pub delta: Fixed,
}

impl Convergent {
    pub fn delta_f64(&self) -> f64 {
        self.delta.to_f64()
    }
}

#[derive(Debug, Clone)]
pub struct ConvergentTable {
    pub target: CfTarget,
    pub entries: Vec<Convergent>,
    pub alpha_exact: AlphaExact,
    pub alpha_fixed: Fixed,
    pub precision_bits: u32,
}

/// Exact value of the periodic expansion: the purely periodic tail solves the
/// integer quadratic obtained from its transfer matrix, and the pre-period is
/// applied as a Moebius map, all inside `Q(sqrt(disc))`.
pub fn evaluate_surd_exact(alpha: &QuadraticIrrational) -> QuadExt {
    // convergent matrix of the period digits b1..bp read as [b1; b2, ..., bp]
    let (mut pp, mut pc) = (BigInt::one(), BigInt::from(alpha.period()[0]));
    let (mut qp, mut qc) = (BigInt::zero(), BigInt::one());
    for &b in &alpha.period()[1..] {
        let (pn, qn) = (b * &pc + &pp, b * &qc + &qp);
        pp = pc;
        pc = pn;
        qp = qc;
        qc = qn;
    }
    // tail t = [b1; b2, ..., bp, t]  =>  qc t^2 + (qp - pc) t - pp = 0
    let a2 = qc;
    let b2 = &qp - &pc;
    let disc = &b2 * &b2 + BigInt::from(4) * &a2 * &pp;
    debug_assert!(disc.is_positive() && disc.sqrt().pow(2) != disc, "discriminant must be non-square");
    let half = BigRational::new(BigInt::one(), BigInt::from(2) * &a2);
    let t = QuadExt::new(
        BigRational::from(-&b2) * &half,
        BigRational::from(BigInt::one()) * &half,
        disc.clone(),
    );

    // pre-period convergents of [a0; a1, ..., as]
    let (mut up, mut uc) = (BigInt::one(), BigInt::from(alpha.pre_period()[0]));
    let (mut vp, mut vc) = (BigInt::zero(), BigInt::one());
    for &a in &alpha.pre_period()[1..] {
        let (un, vn) = (a * &uc + &up, a * &vc + &vp);
        up = uc;
        uc = un;
        vp = vc;
        vc = vn;
    }
    // alpha = (u_s t + u_{s-1}) / (v_s t + v_{s-1})
    let num = t.scale_int(&uc).add(&QuadExt::from_int(&up, &disc));
    let den = t.scale_int(&vc).add(&QuadExt::from_int(&vp, &disc));
    num.div(&den)
}

/// Value of the expansion to at least `precision_bits - 8` bits.
pub fn evaluate_surd(alpha: &QuadraticIrrational, precision_bits: u32) -> Fixed {
    evaluate_surd_exact(alpha).to_fixed(precision_bits)
}

/// Cheap double-precision estimate of `lambda = log(eta)/p` from the trace of
/// the period's transfer matrix.
pub fn lambda_estimate(alpha: &QuadraticIrrational) -> f64 {
    let mut m = [1.0f64, 0.0, 0.0, 1.0];
    for &a in alpha.period() {
        // multiply by [[0,1],[1,a]] on the left
        let a = a as f64;
        m = [m[2], m[3], m[0] + a * m[2], m[1] + a * m[3]];
    }
    let tr = m[0] + m[3];
    let det = if alpha.p() % 2 == 0 { 1.0 } else { -1.0 };
    let eta = (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0;
    eta.ln() / alpha.p() as f64
}

/// Spec default precision: enough for every `delta_k` down the table plus a
/// 64-bit guard, but never below 256 bits.
pub fn default_precision_bits(alpha: &QuadraticIrrational, k_max: usize) -> u32 {
    let lam = lambda_estimate(alpha);
    let bits = (2.0 * k_max as f64 * lam / std::f64::consts::LN_2).ceil() as u32 + 64;
    bits.max(256)
}

impl ConvergentTable {
    /// Build the table for `alpha` with rows `k = 0..=k_max`.
    ///
    /// For a rational target `k_max` is capped at the expansion length.
    /// Fails with a precision error when `precision_bits` cannot resolve the
    /// smallest `delta_k` in the table.
    pub fn build(target: &CfTarget, k_max: usize, precision_bits: u32) -> Result<Self> {
        let (digits, alpha_exact): (Vec<BigInt>, AlphaExact) = match target {
            CfTarget::Rational(r) => {
                let d = cf_of_rational(r);
                let val = BigRational::new(r.numer().clone(), r.denom().clone());
                (d, AlphaExact::Rational(val))
            }
            CfTarget::Quadratic(qi) => {
                let d = (0..=k_max).map(|k| BigInt::from(qi.digit(k))).collect();
                (d, AlphaExact::Quadratic(evaluate_surd_exact(qi)))
            }
        };
        let k_top = k_max.min(digits.len() - 1);

        let mut entries = Vec::with_capacity(k_top + 1);
        let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
        let (mut p, mut q) = (digits[0].clone(), BigInt::one());
        for (k, a) in digits.iter().enumerate().take(k_top + 1) {
            if k > 0 {
                let p_next = a * &p + &p_prev;
                let q_next = a * &q + &q_prev;
                p_prev = std::mem::replace(&mut p, p_next);
                q_prev = std::mem::replace(&mut q, q_next);
            }
            entries.push(Convergent {
                a: a.clone(),
                p: p.clone(),
                q: q.clone(),
                delta: Fixed::zero(precision_bits),
            });
        }

        let q_last_bits = entries.last().unwrap().q.bits() as u32;
        let needed = 2 * q_last_bits + 64;
        if precision_bits < needed {
            return Err(Error::PrecisionInsufficient { needed, got: precision_bits });
        }

        let alpha_fixed = alpha_exact.to_fixed(precision_bits);
        for (k, e) in entries.iter_mut().enumerate() {
            let signed = match &alpha_exact {
                // q alpha - p = (q a - p b)/b, exactly
                AlphaExact::Rational(r) => {
                    let num = &e.q * r.numer() - &e.p * r.denom();
                    Fixed::from_ratio(&num, r.denom(), precision_bits)
                }
                AlphaExact::Quadratic(_) => {
                    alpha_fixed.mul_int(&e.q).sub(&Fixed::from_bigint(&e.p, precision_bits))
                }
            };
            e.delta = if k % 2 == 0 { signed } else { signed.neg() };
        }

        Ok(ConvergentTable { target: target.clone(), entries, alpha_exact, alpha_fixed, precision_bits })
    }

    pub fn build_quadratic(alpha: &QuadraticIrrational, k_max: usize, precision_bits: u32) -> Result<Self> {
        Self::build(&CfTarget::Quadratic(alpha.clone()), k_max, precision_bits)
    }

    /// Highest row index.
    pub fn k_max(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn quadratic(&self) -> Option<&QuadraticIrrational> {
        match &self.target {
            CfTarget::Quadratic(qi) => Some(qi),
            CfTarget::Rational(_) => None,
        }
    }

    /// Partial quotient `a_k`, following the period beyond the table depth
    /// for quadratic targets.
    pub fn digit(&self, k: usize) -> Result<BigInt> {
        if k <= self.k_max() {
            return Ok(self.entries[k].a.clone());
        }
        match &self.target {
            CfTarget::Quadratic(qi) => Ok(BigInt::from(qi.digit(k))),
            CfTarget::Rational(_) => Err(Error::Range(format!("digit index {k} beyond expansion length"))),
        }
    }

    /// `q_{k_max + 1}`, the exclusive bound for Ostrowski encoding.
    pub fn q_next(&self) -> Result<BigInt> {
        let k = self.k_max();
        let a_next = self.digit(k + 1)?;
        let q_prev = if k == 0 { BigInt::zero() } else { self.entries[k - 1].q.clone() };
        Ok(a_next * &self.entries[k].q + q_prev)
    }

    /// `A_k = 1 + max_{1 <= l <= k} a_l`.
    pub fn a_big(&self, k: usize) -> f64 {
        let m = self.entries[1..=k.min(self.k_max())]
            .iter()
            .map(|e| e.a.to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0f64, f64::max);
        1.0 + m
    }

    /// `kappa = 1/(max_k a_k + 3)` for quadratic targets.
    pub fn kappa(&self) -> Option<f64> {
        self.quadratic().map(|qi| 1.0 / (qi.max_digit() as f64 + 3.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::Rational;

    fn golden() -> QuadraticIrrational {
        QuadraticIrrational::new(vec![1], vec![1]).unwrap()
    }

    #[test]
    fn golden_value() {
        let v = evaluate_surd(&golden(), 256).to_f64();
        assert!((v - 1.618033988749895).abs() < 1e-15);
    }

    #[test]
    fn sqrt2_value() {
        let qi = QuadraticIrrational::new(vec![1], vec![2]).unwrap();
        let v = evaluate_surd(&qi, 256);
        let two = Fixed::from_i64(2, 256);
        assert!(v.mul(&v).sub(&two).abs().to_f64() < 1e-70);
    }

    #[test]
    fn zero_six_periodic_value() {
        // [0; (6)] solves y = 1/(6+y), i.e. y = sqrt(10) - 3
        let qi = QuadraticIrrational::new(vec![0], vec![6]).unwrap();
        let v = evaluate_surd(&qi, 256).to_f64();
        assert!((v - (10f64.sqrt() - 3.0)).abs() < 1e-15);
    }

    #[test]
    fn fibonacci_table() {
        let t = ConvergentTable::build_quadratic(&golden(), 4, 256).unwrap();
        let qs: Vec<i64> = t.entries.iter().map(|e| e.q.to_i64().unwrap()).collect();
        let ps: Vec<i64> = t.entries.iter().map(|e| e.p.to_i64().unwrap()).collect();
        assert_eq!(qs, vec![1, 1, 2, 3, 5]);
        assert_eq!(ps, vec![1, 2, 3, 5, 8]);
    }

    #[test]
    fn sqrt2_table() {
        let qi = QuadraticIrrational::new(vec![1], vec![2]).unwrap();
        let t = ConvergentTable::build_quadratic(&qi, 3, 256).unwrap();
        let qs: Vec<i64> = t.entries.iter().map(|e| e.q.to_i64().unwrap()).collect();
        let ps: Vec<i64> = t.entries.iter().map(|e| e.p.to_i64().unwrap()).collect();
        assert_eq!(qs, vec![1, 2, 5, 12]);
        assert_eq!(ps, vec![1, 3, 7, 17]);
    }

    #[test]
    fn golden_deltas_match_binet() {
        // delta_k = phi^{-(k+1)} for the golden mean
        let t = ConvergentTable::build_quadratic(&golden(), 20, 256).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        for (k, e) in t.entries.iter().enumerate() {
            let expect = phi.powi(-(k as i32 + 1));
            assert!((e.delta_f64() - expect).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn determinant_identity() {
        let qi = QuadraticIrrational::new(vec![3, 1, 2], vec![4, 5]).unwrap();
        let t = ConvergentTable::build_quadratic(&qi, 12, 512).unwrap();
        for k in 1..=t.k_max() {
            let lhs = &t.entries[k].q * &t.entries[k - 1].p - &t.entries[k].p * &t.entries[k - 1].q;
            let expect = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            assert_eq!(lhs, expect, "k={k}");
        }
    }

    #[test]
    fn delta_bounds_and_sandwich() {
        let qi = QuadraticIrrational::new(vec![0], vec![2, 7]).unwrap();
        let t = ConvergentTable::build_quadratic(&qi, 14, 512).unwrap();
        let kappa = t.kappa().unwrap();
        for k in 0..t.k_max() {
            let d = t.entries[k].delta_f64();
            let d1 = t.entries[k + 1].delta_f64();
            assert!(d > 0.0 && d1 < d);
            assert!(kappa * d <= d1 + 1e-15 && d1 <= (1.0 - kappa) * d + 1e-15, "k={k}");
            if k >= 1 {
                let qk1 = t.entries[k + 1].q.to_f64().unwrap();
                let qk = t.entries[k].q.to_f64().unwrap();
                assert!(d < 1.0 / qk1 && d > 1.0 / (qk1 + qk), "k={k}");
            }
        }
    }

    #[test]
    fn rational_table_caps_depth() {
        let r = Rational::from_i64(5, 3).unwrap();
        let t = ConvergentTable::build(&CfTarget::Rational(r), 10, 256).unwrap();
        assert_eq!(t.k_max(), 2); // [1; 1, 2]
        let last = t.entries.last().unwrap();
        assert_eq!(last.p, BigInt::from(5));
        assert_eq!(last.q, BigInt::from(3));
        assert!(last.delta.is_zero());
    }

    #[test]
    fn precision_guard() {
        let err = ConvergentTable::build_quadratic(&golden(), 200, 128).unwrap_err();
        assert!(matches!(err, Error::PrecisionInsufficient { .. }));
        let bits = default_precision_bits(&golden(), 200);
        assert!(ConvergentTable::build_quadratic(&golden(), 200, bits).is_ok());
    }
}
