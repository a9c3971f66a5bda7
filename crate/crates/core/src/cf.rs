//! Continued-fraction input objects: reduced rationals and quadratic
//! irrationals given by an eventually periodic partial-quotient sequence.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A reduced fraction `a/b` with `b >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rational {
    numer: BigInt,
    denom: BigInt,
}

impl Rational {
    pub fn new(numer: BigInt, denom: BigInt) -> Result<Self> {
        if denom.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        let (mut n, mut d) = if denom.is_negative() { (-numer, -denom) } else { (numer, denom) };
        let g = n.gcd(&d);
        if !g.is_one() {
            n /= &g;
            d /= &g;
        }
        Ok(Rational { numer: n, denom: d })
    }

    pub fn from_i64(numer: i64, denom: i64) -> Result<Self> {
        Self::new(BigInt::from(numer), BigInt::from(denom))
    }

    pub fn numer(&self) -> &BigInt {
        &self.numer
    }

    pub fn denom(&self) -> &BigInt {
        &self.denom
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer, self.denom)
    }
}

/// Continued-fraction digits of `a/b` in canonical form: the final digit is
/// `> 1` unless the expansion is the single digit `[a0]`.
pub fn cf_of_rational(x: &Rational) -> Vec<BigInt> {
    let mut digits = Vec::new();
    let mut n = x.numer.clone();
    let mut d = x.denom.clone();
    loop {
        let (q, r) = n.div_mod_floor(&d);
        digits.push(q);
        if r.is_zero() {
            break;
        }
        n = d;
        d = r;
    }
    // [.., a, 1] == [.., a+1]
    if digits.len() > 1 && digits.last().unwrap().is_one() {
        digits.pop();
        *digits.last_mut().unwrap() += 1;
    }
    digits
}

/// Rebuild the rational from its digits (the final convergent).
pub fn rational_from_digits(digits: &[BigInt]) -> Result<Rational> {
    if digits.is_empty() {
        return Err(Error::Domain("empty digit list".into()));
    }
    let (mut p_prev, mut p) = (BigInt::one(), digits[0].clone());
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    for a in &digits[1..] {
        let p_next = a * &p + &p_prev;
        let q_next = a * &q + &q_prev;
        p_prev = p;
        p = p_next;
        q_prev = q;
        q = q_next;
    }
    Rational::new(p, q)
}

/// A quadratic irrational `[a0; a1, ..., as, (b1, ..., bp)]` where the
/// parenthesized block repeats forever.
///
/// The representation must be canonical: the period is not a repetition of a
/// shorter block, and no trailing pre-period digit could be absorbed into a
/// rotation of the period. Non-canonical inputs are rejected rather than
/// silently rewritten, since residue-class indexing depends on the stated
/// period alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticIrrational {
    pre_period: Vec<i64>,
    period: Vec<i64>,
}

impl QuadraticIrrational {
    pub fn new(pre_period: Vec<i64>, period: Vec<i64>) -> Result<Self> {
        if pre_period.is_empty() {
            return Err(Error::NonCanonical("pre-period must contain at least a0".into()));
        }
        if period.is_empty() {
            return Err(Error::NonCanonical("period must be nonempty".into()));
        }
        if pre_period[1..].iter().any(|&a| a < 1) || period.iter().any(|&a| a < 1) {
            return Err(Error::NonCanonical("partial quotients a_k with k >= 1 must be >= 1".into()));
        }
        let p = period.len();
        for div in 1..p {
            if p % div == 0 && (0..p).all(|i| period[i] == period[i % div]) {
                return Err(Error::NonCanonical(format!(
                    "period is a repetition of the shorter block {:?}",
                    &period[..div]
                )));
            }
        }
        if pre_period.len() >= 2 && pre_period.last() == period.last() {
            return Err(Error::NonCanonical(
                "last pre-period digit equals last period digit; absorb it into the period".into(),
            ));
        }
        Ok(QuadraticIrrational { pre_period, period })
    }

    /// Partial quotient `a_k` for any `k >= 0`.
    pub fn digit(&self, k: usize) -> i64 {
        if k < self.pre_period.len() {
            self.pre_period[k]
        } else {
            self.period[(k - self.pre_period.len()) % self.period.len()]
        }
    }

    /// Pre-period length `s` (digits `a1..as`; `s = 0` means the period
    /// starts right after `a0`).
    pub fn s(&self) -> usize {
        self.pre_period.len() - 1
    }

    /// Period length `p`.
    pub fn p(&self) -> usize {
        self.period.len()
    }

    pub fn pre_period(&self) -> &[i64] {
        &self.pre_period
    }

    pub fn period(&self) -> &[i64] {
        &self.period
    }

    /// Largest partial quotient over `k >= 1`.
    pub fn max_digit(&self) -> i64 {
        self.pre_period[1..]
            .iter()
            .chain(self.period.iter())
            .copied()
            .max()
            .expect("period is nonempty")
    }

    /// Residue class `[k]` in `1..=p` of an index `k > s`.
    pub fn residue_class(&self, k: usize) -> usize {
        assert!(k > self.s(), "index {k} not beyond the pre-period");
        (k - self.s() - 1) % self.p() + 1
    }

    /// Arithmetic mean of the period digits.
    pub fn avg_partial_quotient(&self) -> f64 {
        self.period.iter().map(|&a| a as f64).sum::<f64>() / self.period.len() as f64
    }
}

impl fmt::Display for QuadraticIrrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.pre_period[0])?;
        write!(f, ";")?;
        for (i, a) in self.pre_period[1..].iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, " {a}")?;
        }
        if self.pre_period.len() > 1 {
            write!(f, ",")?;
        }
        write!(f, " (")?;
        for (i, a) in self.period.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")]")
    }
}

/// Either kind of evaluation target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CfTarget {
    Rational(Rational),
    Quadratic(QuadraticIrrational),
}

impl fmt::Display for CfTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfTarget::Rational(r) => write!(f, "{r}"),
            CfTarget::Quadratic(q) => write!(f, "{q}"),
        }
    }
}

impl FromStr for QuadraticIrrational {
    type Err = Error;

    /// Parses `[a0; a1, ..., as, (b1, ..., bp)]`.
    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser::new(s);
        let qi = p.quadratic()?;
        p.finish()?;
        Ok(qi)
    }
}

impl FromStr for CfTarget {
    type Err = Error;

    /// Parses either `a/b` (or a bare integer) or the bracketed periodic form.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim_start();
        if t.starts_with('[') {
            Ok(CfTarget::Quadratic(s.parse()?))
        } else {
            let mut p = Parser::new(s);
            let r = p.rational()?;
            p.finish()?;
            Ok(CfTarget::Rational(r))
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(s: &'a str) -> Self {
        Parser { src: s.as_bytes(), pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.pos < self.src.len() && self.src[self.pos] == c {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if text.is_empty() || text == "-" {
            self.pos = start;
            return self.err("expected an integer");
        }
        text.parse::<i64>().or_else(|_| self.err("integer out of range"))
    }

    fn bigint(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if text.is_empty() || text == "-" {
            self.pos = start;
            return self.err("expected an integer");
        }
        Ok(BigInt::parse_bytes(text.as_bytes(), 10).unwrap())
    }

    fn rational(&mut self) -> Result<Rational> {
        let n = self.bigint()?;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let d = self.bigint()?;
            if d.is_zero() {
                return self.err("zero denominator");
            }
            Rational::new(n, d)
        } else {
            Rational::new(n, BigInt::one())
        }
    }

    fn quadratic(&mut self) -> Result<QuadraticIrrational> {
        self.eat(b'[')?;
        let a0 = self.integer()?;
        self.eat(b';')?;
        let mut pre = vec![a0];
        let mut period = Vec::new();
        loop {
            match self.peek() {
                Some(b'(') => {
                    self.pos += 1;
                    loop {
                        period.push(self.integer()?);
                        match self.peek() {
                            Some(b',') => {
                                self.pos += 1;
                            }
                            Some(b')') => {
                                self.pos += 1;
                                break;
                            }
                            _ => return self.err("expected ',' or ')' in period"),
                        }
                    }
                    self.eat(b']')?;
                    break;
                }
                Some(_) => {
                    pre.push(self.integer()?);
                    match self.peek() {
                        Some(b',') => {
                            self.pos += 1;
                        }
                        Some(b'(') => {}
                        _ => return self.err("expected ',' or '(' after pre-period digit"),
                    }
                }
                None => return self.err("unterminated expansion"),
            }
        }
        QuadraticIrrational::new(pre, period)
    }

    fn finish(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos != self.src.len() {
            return self.err("trailing input");
        }
        Ok(())
    }
}
