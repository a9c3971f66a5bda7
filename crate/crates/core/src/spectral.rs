//! Spectral data of the period: transfer matrices `T_r`, the eigenvalue
//! `eta`, the growth exponent `lambda`, and the coefficients `C_r, D_r, E_r`
//! of the closed forms
//!
//! ```text
//! q_{s+mp+r}     = C_r eta^m + D_r (-1)^{mp} eta^{-m}
//! delta_{s+mp+r} = E_r eta^{-m}
//! ```
//!
//! Everything here is computed exactly in `Q(sqrt(disc))` and verified
//! against the integer table before being handed out.

use num_bigint::BigInt;
use num_traits::One;
use std::cmp::Ordering;

use crate::cf::QuadraticIrrational;
use crate::convergents::ConvergentTable;
use crate::error::{Error, Result};
use crate::surd::QuadExt;

/// 2x2 integer matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl Mat2 {
    fn identity() -> Self {
        Mat2 { a: BigInt::one(), b: BigInt::from(0), c: BigInt::from(0), d: BigInt::one() }
    }

    fn mul(&self, rhs: &Mat2) -> Self {
        Mat2 {
            a: &self.a * &rhs.a + &self.b * &rhs.c,
            b: &self.a * &rhs.b + &self.b * &rhs.d,
            c: &self.c * &rhs.a + &self.d * &rhs.c,
            d: &self.c * &rhs.b + &self.d * &rhs.d,
        }
    }

    pub fn trace(&self) -> BigInt {
        &self.a + &self.d
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    /// Apply to a column vector.
    pub fn apply(&self, x: &BigInt, y: &BigInt) -> (BigInt, BigInt) {
        (&self.a * x + &self.b * y, &self.c * x + &self.d * y)
    }
}

/// Digit step matrix `[[0, 1], [1, a]]`.
fn step(a: &BigInt) -> Mat2 {
    Mat2 { a: BigInt::from(0), b: BigInt::one(), c: BigInt::one(), d: a.clone() }
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Dominant eigenvalue of the period matrices, `eta > 1`.
    pub eta: QuadExt,
    pub eta_f64: f64,
    /// Second eigenvalue `mu = (-1)^p / eta`.
    pub mu: QuadExt,
    /// `log(eta) / p`; satisfies `log q_k = lambda k + O(1)`.
    pub lambda: f64,
    pub trace: BigInt,
    pub disc: BigInt,
    /// Period matrices `T_r`, indexed `r - 1`.
    pub t_matrices: Vec<Mat2>,
    pub c_coeff: Vec<QuadExt>,
    pub d_coeff: Vec<QuadExt>,
    pub e_coeff: Vec<QuadExt>,
    /// `B_r = C_r E_r = lim_m q_{s+mp+r} delta_{s+mp+r}`.
    pub b_limit: Vec<QuadExt>,
    /// Reversed-period irrationals `alpha_r = [0; (a_{s+r+p}, ..., a_{s+r+1})]`.
    pub alpha_rev: Vec<QuadraticIrrational>,
    /// `1 / (max_{k>=1} a_k + 3)`.
    pub kappa: f64,
    pub s: usize,
    pub p: usize,
}

impl SpectralData {
    pub fn b_f64(&self, r: usize) -> f64 {
        self.b_limit[r - 1].to_f64()
    }

    pub fn c_f64(&self, r: usize) -> f64 {
        self.c_coeff[r - 1].to_f64()
    }

    pub fn e_f64(&self, r: usize) -> f64 {
        self.e_coeff[r - 1].to_f64()
    }
}

/// Extract the spectral data from a convergent table of `alpha`.
///
/// The table must reach at least two full periods beyond the pre-period
/// (`k_max >= s + 2p`).
pub fn spectral(alpha: &QuadraticIrrational, table: &ConvergentTable) -> Result<SpectralData> {
    match table.quadratic() {
        Some(qi) if qi == alpha => {}
        _ => return Err(Error::Domain("table target does not match alpha".into())),
    }
    let s = alpha.s();
    let p = alpha.p();
    if table.k_max() < s + 2 * p {
        return Err(Error::Range(format!(
            "table depth {} too shallow for spectral extraction (need k_max >= {})",
            table.k_max(),
            s + 2 * p
        )));
    }

    let t_matrices: Vec<Mat2> = (1..=p)
        .map(|r| {
            let mut t = Mat2::identity();
            for j in (s + r + 1)..=(s + r + p) {
                t = step(&BigInt::from(alpha.digit(j))).mul(&t);
            }
            t
        })
        .collect();

    let trace = t_matrices[0].trace();
    let sigma = if p % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    for t in &t_matrices {
        if t.trace() != trace || t.det() != sigma {
            return Err(Error::Inconsistent("period matrices disagree on trace or determinant".into()));
        }
    }

    let disc = &trace * &trace - BigInt::from(4) * &sigma;
    let alpha_exact = table
        .alpha_exact
        .as_quadext()
        .ok_or_else(|| Error::Domain("table carries no exact surd".into()))?;
    if alpha_exact.radicand() != &disc {
        return Err(Error::Inconsistent(format!(
            "field mismatch: alpha lives in Q(sqrt({})), period gives Q(sqrt({disc}))",
            alpha_exact.radicand()
        )));
    }

    let half = |n: QuadExt| n.scale(&num_rational::BigRational::new(BigInt::one(), BigInt::from(2)));
    let eta = half(QuadExt::from_int(&trace, &disc).add(&QuadExt::sqrt_d(&disc)));
    let mu = half(QuadExt::from_int(&trace, &disc).sub(&QuadExt::sqrt_d(&disc)));
    if eta.sub(&QuadExt::from_int(&BigInt::one(), &disc)).sign() != Ordering::Greater {
        return Err(Error::Inconsistent("dominant eigenvalue is not > 1".into()));
    }
    let eta_f64 = eta.to_f64();
    let lambda = eta_f64.ln() / p as f64;

    let q_at = |k: usize| &table.entries[k].q;
    let delta_exact = |k: usize| -> QuadExt {
        let v = alpha_exact
            .scale_int(q_at(k))
            .sub(&QuadExt::from_int(&table.entries[k].p, &disc));
        if k % 2 == 0 {
            v
        } else {
            v.neg()
        }
    };

    let mut c_coeff = Vec::with_capacity(p);
    let mut d_coeff = Vec::with_capacity(p);
    let mut e_coeff = Vec::with_capacity(p);
    let mut b_limit = Vec::with_capacity(p);
    let mut alpha_rev = Vec::with_capacity(p);

    for r in 1..=p {
        // the two deepest available indices in this residue class
        let m2 = (table.k_max() - s - r) / p;
        let m1 = m2 - 1;
        let k1 = s + m1 * p + r;
        let k2 = s + m2 * p + r;

        let q1 = QuadExt::from_int(q_at(k1), &disc);
        let q2 = QuadExt::from_int(q_at(k2), &disc);
        let (em1, em2) = (eta.pow(m1 as u32), eta.pow(m2 as u32));
        let (mm1, mm2) = (mu.pow(m1 as u32), mu.pow(m2 as u32));
        let denom = em1.mul(&mm2).sub(&em2.mul(&mm1));
        let c = q1.mul(&mm2).sub(&q2.mul(&mm1)).div(&denom);
        let d = q2.mul(&em1).sub(&q1.mul(&em2)).div(&denom);

        // verify against a third sample (m = 0), exactly
        let predicted = c.add(&d);
        if predicted != QuadExt::from_int(q_at(s + r), &disc) {
            return Err(Error::Inconsistent(format!("q-recursion solution fails at r={r}, m=0")));
        }

        let e = delta_exact(k2).mul(&eta.pow(m2 as u32));
        if e != delta_exact(k1).mul(&eta.pow(m1 as u32)) {
            return Err(Error::Inconsistent(format!("delta solution is not m-invariant at r={r}")));
        }
        if c.sign() != Ordering::Greater || e.sign() != Ordering::Greater {
            return Err(Error::Inconsistent(format!("C_{r} or E_{r} not positive")));
        }

        let b = c.mul(&e);
        let rev: Vec<i64> = ((s + r + 1)..=(s + r + p)).rev().map(|j| alpha.digit(j)).collect();
        alpha_rev.push(QuadraticIrrational::new(vec![0], rev).expect("reversed period stays canonical"));

        c_coeff.push(c);
        d_coeff.push(d);
        e_coeff.push(e);
        b_limit.push(b);
    }

    let kappa = 1.0 / (alpha.max_digit() as f64 + 3.0);

    Ok(SpectralData {
        eta,
        eta_f64,
        mu,
        lambda,
        trace,
        disc,
        t_matrices,
        c_coeff,
        d_coeff,
        e_coeff,
        b_limit,
        alpha_rev,
        kappa,
        s,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convergents::evaluate_surd_exact;
    use num_traits::ToPrimitive;

    fn table(qi: &QuadraticIrrational, k: usize) -> ConvergentTable {
        ConvergentTable::build_quadratic(qi, k, 512).unwrap()
    }

    #[test]
    fn golden_spectrum() {
        let g = QuadraticIrrational::new(vec![1], vec![1]).unwrap();
        let t = table(&g, 20);
        let sp = spectral(&g, &t).unwrap();
        assert_eq!(sp.trace, BigInt::one());
        assert_eq!(sp.disc, BigInt::from(5));
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sp.eta_f64 - phi).abs() < 1e-15);
        assert!((sp.lambda - phi.ln()).abs() < 1e-15);
        assert!((sp.lambda - 0.4812).abs() < 1e-4);
        // T = [[0,1],[1,1]]
        assert_eq!(sp.t_matrices[0], Mat2 {
            a: BigInt::from(0), b: BigInt::one(), c: BigInt::one(), d: BigInt::one()
        });
        // B_1 = 1/sqrt(5)
        assert!((sp.b_f64(1) - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((sp.b_f64(1) - 0.44721).abs() < 1e-5);
        // alpha_1 = [0; (1)]
        assert_eq!(sp.alpha_rev[0], QuadraticIrrational::new(vec![0], vec![1]).unwrap());
        assert_eq!(sp.kappa, 0.25);
    }

    #[test]
    fn sqrt2_spectrum() {
        let qi = QuadraticIrrational::new(vec![1], vec![2]).unwrap();
        let sp = spectral(&qi, &table(&qi, 16)).unwrap();
        assert!((sp.eta_f64 - (1.0 + 2f64.sqrt())).abs() < 1e-14);
        assert!((sp.lambda - 0.8814).abs() < 1e-4);
    }

    #[test]
    fn eigenvalue_relations() {
        let qi = QuadraticIrrational::new(vec![2, 1], vec![3, 1, 4]).unwrap();
        let t = table(&qi, 1 + 3 * 6);
        let sp = spectral(&qi, &t).unwrap();
        // eta * mu = (-1)^p, eta + mu = trace
        let prod = sp.eta.mul(&sp.mu);
        let sigma = if sp.p % 2 == 0 { 1 } else { -1 };
        assert_eq!(prod, QuadExt::from_int(&BigInt::from(sigma), &sp.disc));
        assert_eq!(sp.eta.add(&sp.mu), QuadExt::from_int(&sp.trace, &sp.disc));
    }

    #[test]
    fn closed_forms_reproduce_table() {
        let qi = QuadraticIrrational::new(vec![2, 1], vec![3, 1, 4]).unwrap();
        let t = table(&qi, 1 + 3 * 6);
        let sp = spectral(&qi, &t).unwrap();
        let alpha = evaluate_surd_exact(&qi);
        for k in (sp.s + 1)..=t.k_max() {
            let r = qi.residue_class(k);
            let m = (k - sp.s - r) / sp.p;
            let q_pred = sp.c_coeff[r - 1]
                .mul(&sp.eta.pow(m as u32))
                .add(&sp.d_coeff[r - 1].mul(&sp.mu.pow(m as u32)));
            assert_eq!(q_pred, QuadExt::from_int(&t.entries[k].q, &sp.disc), "q at k={k}");
            // delta_{s+mp+r} * eta^m = E_r exactly
            let v = alpha
                .scale_int(&t.entries[k].q)
                .sub(&QuadExt::from_int(&t.entries[k].p, &sp.disc));
            let d = if k % 2 == 0 { v } else { v.neg() };
            assert_eq!(d.mul(&sp.eta.pow(m as u32)), sp.e_coeff[r - 1], "delta at k={k}");
        }
    }

    #[test]
    fn t_matrices_advance_q_vectors() {
        let qi = QuadraticIrrational::new(vec![0], vec![2, 4]).unwrap();
        let t = table(&qi, 12);
        let sp = spectral(&qi, &t).unwrap();
        let (s, p) = (sp.s, sp.p);
        for r in 1..=p {
            for m in 1..=2usize {
                if s + m * p + r > t.k_max() {
                    continue;
                }
                let mut mat = Mat2::identity();
                for _ in 0..m {
                    mat = sp.t_matrices[r - 1].mul(&mat);
                }
                let (x, y) = mat.apply(&t.entries[s + r - 1].q, &t.entries[s + r].q);
                assert_eq!(x, t.entries[s + m * p + r - 1].q);
                assert_eq!(y, t.entries[s + m * p + r].q);
            }
        }
    }

    #[test]
    fn b_limit_matches_q_delta_product() {
        let qi = QuadraticIrrational::new(vec![3], vec![6]).unwrap();
        let t = table(&qi, 14);
        let sp = spectral(&qi, &t).unwrap();
        let k = 13;
        let qd = t.entries[k].q.to_f64().unwrap() * t.entries[k].delta_f64();
        assert!((qd - sp.b_f64(qi.residue_class(k))).abs() < 1e-10);
    }

    #[test]
    fn reversed_period_value_is_q_ratio_limit() {
        let qi = QuadraticIrrational::new(vec![2, 1], vec![3, 1, 4]).unwrap();
        let t = table(&qi, 1 + 3 * 7);
        let sp = spectral(&qi, &t).unwrap();
        for k in (t.k_max() - sp.p + 1)..=t.k_max() {
            let r = qi.residue_class(k);
            let ratio = t.entries[k - 1].q.to_f64().unwrap() / t.entries[k].q.to_f64().unwrap();
            let val = crate::convergents::evaluate_surd(&sp.alpha_rev[r - 1], 128).to_f64();
            assert!((ratio - val).abs() < 1e-8, "r={r} ratio={ratio} val={val}");
        }
    }

    #[test]
    fn shallow_table_rejected() {
        let qi = QuadraticIrrational::new(vec![1], vec![1, 2, 3]).unwrap();
        let t = table(&qi, 5);
        assert!(matches!(spectral(&qi, &t), Err(Error::Range(_))));
    }
}
