//! Fixed-point extended-precision reals on top of `BigInt`.
//!
//! A `Fixed` stores an integer mantissa `v` and a precision `bits`, and
//! represents the real number `v / 2^bits`. All values taking part in one
//! computation share the same `bits`, so addition and subtraction are exact
//! integer operations; only multiplication, division and square roots round
//! (toward negative infinity, by at most one ulp).

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fixed {
    v: BigInt,
    bits: u32,
}

impl Fixed {
    pub fn zero(bits: u32) -> Self {
        Fixed { v: BigInt::zero(), bits }
    }

    pub fn one(bits: u32) -> Self {
        Fixed { v: BigInt::from(1u8) << bits, bits }
    }

    /// `v / 2^bits` from a raw mantissa.
    pub fn from_raw(v: BigInt, bits: u32) -> Self {
        Fixed { v, bits }
    }

    pub fn from_bigint(n: &BigInt, bits: u32) -> Self {
        Fixed { v: n << bits, bits }
    }

    pub fn from_i64(n: i64, bits: u32) -> Self {
        Self::from_bigint(&BigInt::from(n), bits)
    }

    /// Exact conversion of an `f64` (must be finite).
    pub fn from_f64(x: f64, bits: u32) -> Self {
        assert!(x.is_finite(), "cannot represent {x} as Fixed");
        if x == 0.0 {
            return Self::zero(bits);
        }
        let b = x.to_bits();
        let sign = if b >> 63 == 1 { Sign::Minus } else { Sign::Plus };
        let biased = ((b >> 52) & 0x7ff) as i64;
        let (mant, exp) = if biased == 0 {
            (b & ((1 << 52) - 1), -1074i64)
        } else {
            ((b & ((1 << 52) - 1)) | (1 << 52), biased - 1075)
        };
        let m = BigInt::from_biguint(sign, BigUint::from(mant));
        let shift = exp + bits as i64;
        let v = if shift >= 0 { m << shift } else { m >> (-shift) };
        Fixed { v, bits }
    }

    /// `numer / denom` rounded toward negative infinity at this precision.
    pub fn from_ratio(numer: &BigInt, denom: &BigInt, bits: u32) -> Self {
        assert!(!denom.is_zero());
        let (n, d) = if denom.is_negative() { (-numer, -denom) } else { (numer.clone(), denom.clone()) };
        Fixed { v: (n << bits).div_floor(&d), bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.v
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.v.is_negative()
    }

    /// Change precision (exact when widening, floor-rounds when narrowing).
    pub fn with_bits(&self, bits: u32) -> Self {
        let v = if bits >= self.bits {
            &self.v << (bits - self.bits)
        } else {
            &self.v >> (self.bits - bits)
        };
        Fixed { v, bits }
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.bits, other.bits, "precision mismatch");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        Fixed { v: &self.v + &other.v, bits: self.bits }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check(other);
        Fixed { v: &self.v - &other.v, bits: self.bits }
    }

    pub fn neg(&self) -> Self {
        Fixed { v: -&self.v, bits: self.bits }
    }

    pub fn abs(&self) -> Self {
        Fixed { v: self.v.abs(), bits: self.bits }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        Fixed { v: (&self.v * &other.v) >> self.bits, bits: self.bits }
    }

    /// Exact product with an integer.
    pub fn mul_int(&self, n: &BigInt) -> Self {
        Fixed { v: &self.v * n, bits: self.bits }
    }

    pub fn div(&self, other: &Self) -> Self {
        self.check(other);
        assert!(!other.v.is_zero());
        let (n, d) = if other.v.is_negative() { (-&self.v, -&other.v) } else { (self.v.clone(), other.v.clone()) };
        Fixed { v: (n << self.bits).div_floor(&d), bits: self.bits }
    }

    pub fn div_int(&self, n: &BigInt) -> Self {
        assert!(!n.is_zero());
        let (num, den) = if n.is_negative() { (-&self.v, -n) } else { (self.v.clone(), n.clone()) };
        Fixed { v: num.div_floor(&den), bits: self.bits }
    }

    /// Floor square root (requires a nonnegative value).
    pub fn sqrt(&self) -> Self {
        assert!(!self.v.is_negative(), "sqrt of negative Fixed");
        Fixed { v: (&self.v << self.bits).sqrt(), bits: self.bits }
    }

    pub fn floor(&self) -> BigInt {
        &self.v >> self.bits
    }

    /// Fractional part in `[0, 1)`.
    pub fn fract(&self) -> Self {
        let f = self.v.mod_floor(&(BigInt::from(1u8) << self.bits));
        Fixed { v: f, bits: self.bits }
    }

    /// Top 128 bits of the fractional part, as a `u128` scaled by `2^-128`.
    pub fn fract_u128(&self) -> u128 {
        let f = self.fract();
        let shifted = if f.bits >= 128 { f.v >> (f.bits - 128) } else { f.v << (128 - f.bits) };
        let (_, digits) = shifted.to_u64_digits();
        let lo = digits.first().copied().unwrap_or(0) as u128;
        let hi = digits.get(1).copied().unwrap_or(0) as u128;
        (hi << 64) | lo
    }

    /// Nearest `f64` (within ~1 ulp; saturates to `±inf`/`0` out of range).
    pub fn to_f64(&self) -> f64 {
        if self.v.is_zero() {
            return 0.0;
        }
        let neg = self.v.is_negative();
        let mag = self.v.magnitude();
        let nbits = mag.bits();
        let (top, shift) = if nbits > 64 {
            let s = nbits - 64;
            let t: BigUint = mag >> s;
            (t.iter_u64_digits().next().unwrap(), s as i64)
        } else {
            (mag.iter_u64_digits().next().unwrap(), 0i64)
        };
        let e = shift - self.bits as i64;
        let x = if e >= -1022 {
            top as f64 * exp2i(e)
        } else {
            // keep the first product in the normal range, then scale down
            top as f64 * exp2i(-1022) * exp2i(e + 1022)
        };
        if neg { -x } else { x }
    }
}

/// `2^e` as an `f64`, saturating outside the representable range.
fn exp2i(e: i64) -> f64 {
    if e >= 1024 {
        f64::INFINITY
    } else if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else if e >= -1074 {
        f64::from_bits(1u64 << (e + 1074))
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_f64() {
        for &x in &[0.0, 1.0, -1.5, 0.1, 12345.6789, -1e-12, 3.0e18] {
            let f = Fixed::from_f64(x, 192);
            assert_eq!(f.to_f64(), x, "roundtrip of {x}");
        }
    }

    #[test]
    fn sqrt_two() {
        let two = Fixed::from_i64(2, 256);
        let r = two.sqrt();
        let err = (r.mul(&r).sub(&two)).abs();
        // one floor-rounding step: |r^2 - 2| <= ~2^-127
        assert!(err.to_f64() < 1e-30);
        assert!((r.to_f64() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fract_and_floor() {
        let x = Fixed::from_f64(-2.25, 64);
        assert_eq!(x.floor(), BigInt::from(-3));
        assert_eq!(x.fract().to_f64(), 0.75);
        let y = Fixed::from_f64(5.5, 64);
        assert_eq!(y.floor(), BigInt::from(5));
        assert_eq!(y.fract().to_f64(), 0.5);
    }

    #[test]
    fn fract_u128_top_bits() {
        let x = Fixed::from_f64(0.5, 200);
        assert_eq!(x.fract_u128(), 1u128 << 127);
        let y = Fixed::from_f64(0.75, 100);
        assert_eq!(y.fract_u128(), 3u128 << 126);
    }

    #[test]
    fn tiny_values_keep_relative_precision() {
        let x = Fixed::from_ratio(&BigInt::from(1), &BigInt::from(10_000_000_000_000u64), 256);
        let f = x.to_f64();
        assert!((f - 1e-13).abs() / 1e-13 < 1e-14);
    }

    #[test]
    fn conversion_reaches_the_subnormal_range() {
        for e in [-900i64, -1030, -1074, -1100] {
            let x = Fixed::from_raw(BigInt::from(1) << 4, (4 - e) as u32); // 2^e
            assert_eq!(x.to_f64(), exp2i(e), "2^{e}");
        }
        let below = Fixed::from_raw(BigInt::from(1), 1200);
        assert_eq!(below.to_f64(), 0.0);
    }
}
