//! Ostrowski numeration with respect to the denominators `q_k` of a
//! convergent table, and the tail offsets `epsilon_k(N)` used by the
//! perturbed-product factorization.
//!
//! Every integer `N >= 0` has a unique expansion `N = sum b_k q_k` with
//! `0 <= b_0 <= a_1 - 1`, `0 <= b_k <= a_{k+1}`, and `b_{k-1} = 0` whenever
//! `b_k = a_{k+1}`. The greedy algorithm (largest `q_k` first) produces the
//! canonical digits; the constraints are asserted rather than repaired, so a
//! violation is a loud failure instead of a silent rewrite.

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

use crate::convergents::ConvergentTable;
use crate::error::{Error, Result};
use crate::fixed::Fixed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OstrowskiExpansion {
    pub n: BigUint,
    /// Little-endian digits: `digits[k] = b_k`.
    pub digits: Vec<u64>,
}

impl OstrowskiExpansion {
    /// Index of the highest nonzero digit, if any.
    pub fn top_index(&self) -> Option<usize> {
        self.digits.iter().rposition(|&b| b != 0)
    }
}

fn digit_bound(table: &ConvergentTable, k: usize) -> Result<u64> {
    let a = table.digit(k + 1)?;
    a.to_u64()
        .ok_or_else(|| Error::Range(format!("partial quotient a_{} too large", k + 1)))
}

fn check_digits(table: &ConvergentTable, digits: &[u64]) -> Result<()> {
    if digits.len() > table.k_max() + 1 {
        return Err(Error::InvalidDigits(format!(
            "digit index {} beyond table depth {}",
            digits.len() - 1,
            table.k_max()
        )));
    }
    for (k, &b) in digits.iter().enumerate() {
        let hi = digit_bound(table, k)?;
        let max = if k == 0 { hi - 1 } else { hi };
        if b > max {
            return Err(Error::InvalidDigits(format!("b_{k} = {b} exceeds bound {max}")));
        }
        if k > 0 && b == hi && digits[k - 1] != 0 {
            return Err(Error::InvalidDigits(format!(
                "b_{k} is maximal but b_{} = {} is nonzero",
                k - 1,
                digits[k - 1]
            )));
        }
    }
    Ok(())
}

/// Greedy Ostrowski digits of `n` (requires `n < q_{k_max + 1}`).
pub fn encode(table: &ConvergentTable, n: &BigUint) -> Result<OstrowskiExpansion> {
    let n_big = BigInt::from(n.clone());
    if n_big >= table.q_next()? {
        return Err(Error::Range(format!("{n} is not representable in a table of depth {}", table.k_max())));
    }
    let mut digits = vec![0u64; table.k_max() + 1];
    let mut rest = n_big;
    for k in (0..=table.k_max()).rev() {
        let q = &table.entries[k].q;
        if &rest >= q {
            let (d, r) = num_integer::Integer::div_rem(&rest, q);
            digits[k] = d.to_u64().ok_or_else(|| Error::Range("digit overflow".into()))?;
            rest = r;
        }
    }
    debug_assert!(rest.is_zero());
    while digits.last() == Some(&0) {
        digits.pop();
    }
    check_digits(table, &digits)?;
    Ok(OstrowskiExpansion { n: n.clone(), digits })
}

/// Sum `b_k q_k` after validating the digit constraints.
pub fn decode(table: &ConvergentTable, digits: &[u64]) -> Result<BigUint> {
    check_digits(table, digits)?;
    let mut acc = BigInt::zero();
    for (k, &b) in digits.iter().enumerate() {
        if b != 0 {
            acc += &table.entries[k].q * BigInt::from(b);
        }
    }
    Ok(acc.to_biguint().expect("sum of nonnegative terms"))
}

/// Tail offset `epsilon_k(N) = q_k sum_{l>k} (-1)^{k+l} b_l delta_l`.
///
/// Summed from the top nonzero digit downward (smallest terms last) at the
/// table precision.
pub fn epsilon(table: &ConvergentTable, k: usize, x: &OstrowskiExpansion) -> Result<Fixed> {
    if k > table.k_max() {
        return Err(Error::Range(format!("index {k} beyond table depth")));
    }
    let bits = table.precision_bits;
    let mut acc = Fixed::zero(bits);
    let top = match x.top_index() {
        Some(t) => t,
        None => return Ok(acc),
    };
    for l in (k + 1..=top.min(table.k_max())).rev() {
        let b = x.digits.get(l).copied().unwrap_or(0);
        if b == 0 {
            continue;
        }
        let term = table.entries[l].delta.mul_int(&BigInt::from(b));
        acc = if (k + l) % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    Ok(acc.mul_int(&table.entries[k].q))
}

/// Native-integer round-trip checker for bulk sweeps. The table's `q_k` and
/// digit bounds must fit in `u128`.
pub struct RoundtripChecker {
    qs: Vec<u128>,
    bounds: Vec<u64>,
    q_next: u128,
    digits: Vec<u64>,
}

impl RoundtripChecker {
    pub fn new(table: &ConvergentTable) -> Result<Self> {
        let qs: Vec<u128> = table
            .entries
            .iter()
            .map(|e| e.q.to_u128().ok_or_else(|| Error::Range("q_k exceeds u128".into())))
            .collect::<Result<_>>()?;
        let bounds: Vec<u64> = (0..=table.k_max()).map(|k| digit_bound(table, k)).collect::<Result<_>>()?;
        let q_next = table.q_next()?.to_u128().ok_or_else(|| Error::Range("q limit exceeds u128".into()))?;
        let digits = vec![0u64; qs.len()];
        Ok(RoundtripChecker { qs, bounds, q_next, digits })
    }

    /// Largest exclusive `N` the table can represent.
    pub fn limit(&self) -> u128 {
        self.q_next
    }

    /// Greedy-encode `n`, validate all digit constraints, and check the
    /// digits sum back to `n`.
    pub fn check(&mut self, n: u128) -> Result<()> {
        if n >= self.q_next {
            return Err(Error::Range("value beyond representable bound".into()));
        }
        let mut rest = n;
        for k in (0..self.qs.len()).rev() {
            if rest >= self.qs[k] {
                self.digits[k] = (rest / self.qs[k]) as u64;
                rest %= self.qs[k];
            } else {
                self.digits[k] = 0;
            }
        }
        if rest != 0 {
            return Err(Error::InvalidDigits(format!("greedy residue nonzero at N={n}")));
        }
        let mut sum = 0u128;
        for (k, &b) in self.digits.iter().enumerate() {
            let cap = if k == 0 { self.bounds[0] - 1 } else { self.bounds[k] };
            if b > cap {
                return Err(Error::InvalidDigits(format!("digit bound violated at N={n}, k={k}")));
            }
            if k > 0 && b == self.bounds[k] && self.digits[k - 1] != 0 {
                return Err(Error::InvalidDigits(format!("extra rule violated at N={n}, k={k}")));
            }
            sum += b as u128 * self.qs[k];
        }
        if sum != n {
            return Err(Error::InvalidDigits(format!("round-trip failed at N={n}: got {sum}")));
        }
        Ok(())
    }
}

/// Exhaustive round-trip check over `lo..hi`; returns the number of values
/// checked.
pub fn roundtrip_sweep(table: &ConvergentTable, lo: u128, hi: u128) -> Result<u64> {
    let mut ck = RoundtripChecker::new(table)?;
    if hi > ck.limit() {
        return Err(Error::Range("sweep range beyond representable bound".into()));
    }
    for n in lo..hi {
        ck.check(n)?;
    }
    Ok((hi - lo) as u64)
}
