//! Exact arithmetic in a real quadratic field `Q(sqrt(d))`.
//!
//! A [`QuadExt`] is `a + b*sqrt(d)` with rational `a, b` and a fixed positive
//! non-square integer `d`. All field operations are exact; conversion to
//! [`Fixed`] or `f64` happens only at the very end of a computation, so no
//! precision is lost along the way.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;

use crate::fixed::Fixed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadExt {
    a: BigRational,
    b: BigRational,
    d: BigInt,
}

impl QuadExt {
    pub fn new(a: BigRational, b: BigRational, d: BigInt) -> Self {
        debug_assert!(d.is_positive());
        QuadExt { a, b, d }
    }

    pub fn from_int(n: &BigInt, d: &BigInt) -> Self {
        QuadExt { a: BigRational::from(n.clone()), b: BigRational::zero(), d: d.clone() }
    }

    pub fn from_rational(r: BigRational, d: &BigInt) -> Self {
        QuadExt { a: r, b: BigRational::zero(), d: d.clone() }
    }

    /// `sqrt(d)` itself.
    pub fn sqrt_d(d: &BigInt) -> Self {
        QuadExt { a: BigRational::zero(), b: BigRational::one(), d: d.clone() }
    }

    pub fn radicand(&self) -> &BigInt {
        &self.d
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.d, other.d, "mixing elements of different quadratic fields");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        QuadExt { a: &self.a + &other.a, b: &self.b + &other.b, d: self.d.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check(other);
        QuadExt { a: &self.a - &other.a, b: &self.b - &other.b, d: self.d.clone() }
    }

    pub fn neg(&self) -> Self {
        QuadExt { a: -&self.a, b: -&self.b, d: self.d.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        let d = BigRational::from(self.d.clone());
        QuadExt {
            a: &self.a * &other.a + (&self.b * &other.b) * &d,
            b: &self.a * &other.b + &self.b * &other.a,
            d: self.d.clone(),
        }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        QuadExt { a: &self.a * r, b: &self.b * r, d: self.d.clone() }
    }

    pub fn scale_int(&self, n: &BigInt) -> Self {
        self.scale(&BigRational::from(n.clone()))
    }

    /// Field conjugate `a - b*sqrt(d)`.
    pub fn conj(&self) -> Self {
        QuadExt { a: self.a.clone(), b: -&self.b, d: self.d.clone() }
    }

    /// Field norm `a^2 - b^2 d` (a rational).
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - (&self.b * &self.b) * BigRational::from(self.d.clone())
    }

    pub fn inv(&self) -> Self {
        let n = self.norm();
        assert!(!n.is_zero(), "inverting zero element");
        self.conj().scale(&n.recip())
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.inv())
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = QuadExt::from_int(&BigInt::one(), &self.d);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Sign of the real value, exact.
    pub fn sign(&self) -> Ordering {
        if self.b.is_zero() {
            return self.a.cmp(&BigRational::zero());
        }
        if self.a.is_zero() {
            return self.b.cmp(&BigRational::zero());
        }
        match (self.a.is_positive(), self.b.is_positive()) {
            (true, true) => Ordering::Greater,
            (false, false) => Ordering::Less,
            (true, false) | (false, true) => {
                // compare a^2 vs b^2 d; sign decided by the larger magnitude term
                let a2 = &self.a * &self.a;
                let b2d = (&self.b * &self.b) * BigRational::from(self.d.clone());
                match a2.cmp(&b2d) {
                    Ordering::Greater => self.a.cmp(&BigRational::zero()),
                    Ordering::Less => self.b.cmp(&BigRational::zero()),
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        self.sub(other).sign()
    }

    pub fn to_fixed(&self, bits: u32) -> Fixed {
        let guard = 32;
        let work = bits + guard;
        let sq = Fixed::from_bigint(&self.d, work).sqrt();
        let a = Fixed::from_ratio(self.a.numer(), self.a.denom(), work);
        let b = Fixed::from_ratio(self.b.numer(), self.b.denom(), work);
        a.add(&b.mul(&sq)).with_bits(bits)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_fixed(128).to_f64()
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*sqrt({})", self.a, self.b, self.d)
    }
}
