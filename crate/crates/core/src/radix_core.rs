//! Base-`b` digits, the radical inverse and the exact rational carrier.
//!
//! For `n = Σ a_i b^{i-1}` the van der Corput point is `x_n = Σ a_i b^{-i}`:
//! the digits of `n` mirrored across the radix point. Everything here is
//! exact; floating point only appears in the modules built on top.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type ExactRational = BigRational;

/// Largest prefix length [`sequence_prefix`] will materialise.
pub const PREFIX_CAP: u64 = 1 << 26;

/// A radix `b ≥ 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Base(u64);

impl Base {
    pub fn new(b: u64) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidBase(b));
        }
        Ok(Base(b))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// `b^m`, or `None` on `u64` overflow.
    pub fn checked_pow(self, m: u32) -> Option<u64> {
        self.0.checked_pow(m)
    }

    /// Number of base-`b` digits of `n`; zero for `n = 0`.
    pub fn digit_count(self, mut n: u64) -> u32 {
        let mut m = 0;
        while n > 0 {
            n /= self.0;
            m += 1;
        }
        m
    }

    /// Smallest `m` with `b^m ≥ n` (so every index below `n` fits in `m` digits).
    pub fn digits_to_cover(self, n: u64) -> u32 {
        if n <= 1 {
            return 0;
        }
        self.digit_count(n - 1)
    }

    /// Largest `s` with `b^s | ell`, for `ell ≠ 0`. Computed by exact division.
    pub fn valuation(self, ell: i64) -> u32 {
        debug_assert!(ell != 0);
        let b = self.0 as u128;
        let mut v = ell.unsigned_abs() as u128;
        let mut s = 0;
        while v % b == 0 {
            v /= b;
            s += 1;
        }
        s
    }

    /// `ln n / ln b`.
    pub fn log(self, n: f64) -> f64 {
        n.ln() / (self.0 as f64).ln()
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<u64> for Base {
    type Error = Error;

    fn try_from(b: u64) -> Result<Self> {
        Base::new(b)
    }
}

/// Digits `a_1, ..., a_m` of an index, least significant first.
///
/// Canonical vectors have no trailing (most significant) zero digit; a padded
/// vector is extended with zeros up to a requested length and remembers it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitVec {
    base: Base,
    digits: Vec<u64>,
    padded: bool,
}

impl DigitVec {
    pub fn from_integer(n: u64, base: Base) -> Self {
        let b = base.get();
        let mut digits = Vec::with_capacity(base.digit_count(n) as usize);
        let mut k = n;
        while k > 0 {
            digits.push(k % b);
            k /= b;
        }
        DigitVec {
            base,
            digits,
            padded: false,
        }
    }

    /// Digits of `n` zero-extended to exactly `m` places.
    pub fn padded(n: u64, base: Base, m: u32) -> Result<Self> {
        let mut v = Self::from_integer(n, base);
        if v.digits.len() > m as usize {
            return Err(Error::domain(format!(
                "{n} needs {} base-{base} digits, more than {m}",
                v.digits.len()
            )));
        }
        v.digits.resize(m as usize, 0);
        v.padded = true;
        Ok(v)
    }

    /// Builds a canonical vector from explicit digits (least significant first).
    pub fn from_digits(base: Base, digits: Vec<u64>) -> Result<Self> {
        if let Some(d) = digits.iter().find(|&&d| d >= base.get()) {
            return Err(Error::domain(format!("digit {d} out of range for base {base}")));
        }
        if digits.last() == Some(&0) {
            return Err(Error::domain("leading zero digit in canonical digit vector"));
        }
        let v = DigitVec {
            base,
            digits,
            padded: false,
        };
        v.checked_value()
            .ok_or_else(|| Error::domain("digit vector value exceeds u64"))?;
        Ok(v)
    }

    pub fn base(&self) -> Base {
        self.base
    }

    /// `a_1..a_m`, least significant first.
    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn is_padded(&self) -> bool {
        self.padded
    }

    fn checked_value(&self) -> Option<u64> {
        self.digits
            .iter()
            .rev()
            .try_fold(0u64, |acc, &d| acc.checked_mul(self.base.get())?.checked_add(d))
    }

    /// `Σ a_i b^{i-1}`.
    pub fn value(&self) -> u64 {
        self.checked_value()
            .expect("digit vectors are only built from u64 values")
    }
}

/// Canonical digit vector of `n`.
pub fn digits_of(n: u64, base: Base) -> DigitVec {
    DigitVec::from_integer(n, base)
}

/// Numerator of `x_n` over the denominator `b^m`, i.e. the digits of `n`
/// reversed within an `m`-digit window. Requires `n < b^m`.
pub fn radical_inverse_scaled(n: u64, base: Base, m: u32) -> u64 {
    let b = base.get();
    let mut k = n;
    let mut r = 0u64;
    for _ in 0..m {
        r = r * b + k % b;
        k /= b;
    }
    debug_assert_eq!(k, 0, "index {n} does not fit in {m} digits");
    r
}

/// Exact van der Corput point `x_n`.
pub fn radical_inverse(n: u64, base: Base) -> ExactRational {
    let b = BigInt::from(base.get());
    let mut num = BigInt::from(0u32);
    let mut den = BigInt::from(1u32);
    let mut k = n;
    while k > 0 {
        num = num * &b + BigInt::from(k % base.get());
        den *= &b;
        k /= base.get();
    }
    ExactRational::new(num, den)
}

/// `[x_0, ..., x_{N-1}]`.
pub fn sequence_prefix(n: u64, base: Base) -> Result<Vec<ExactRational>> {
    if n == 0 {
        return Err(Error::domain("prefix length must be >= 1"));
    }
    if n > PREFIX_CAP {
        return Err(Error::cap("sequence prefix", n, PREFIX_CAP));
    }
    let m = base.digits_to_cover(n);
    let den = base
        .checked_pow(m)
        .ok_or_else(|| Error::cap("denominator b^m", u128::MAX, u64::MAX))?;
    let den = BigInt::from(den);
    Ok((0..n)
        .map(|i| ExactRational::new(BigInt::from(radical_inverse_scaled(i, base, m)), den.clone()))
        .collect())
}

/// Incrementally tracks the digits of `n` and the numerator of `x_n` over a
/// fixed `b^m`, so stepping `n → n+1` costs amortised O(1).
#[derive(Clone, Debug)]
pub(crate) struct RadicalCounter {
    b: u64,
    digits: Vec<u64>,
    weights: Vec<u64>,
    n: u64,
    r: u64,
}

impl RadicalCounter {
    pub(crate) fn new(start: u64, base: Base, m: u32) -> Self {
        let b = base.get();
        let mut weights = vec![0u64; m as usize];
        let mut w = 1u64;
        for i in (0..m as usize).rev() {
            weights[i] = w;
            w = w.saturating_mul(b);
        }
        let mut digits = vec![0u64; m as usize];
        let mut k = start;
        for d in digits.iter_mut() {
            *d = k % b;
            k /= b;
        }
        RadicalCounter {
            b,
            digits,
            weights,
            n: start,
            r: radical_inverse_scaled(start, base, m),
        }
    }

    #[inline]
    pub(crate) fn numerator(&self) -> u64 {
        self.r
    }

    #[cfg(test)]
    pub(crate) fn index(&self) -> u64 {
        self.n
    }

    /// Moves to `n + 1`; the caller keeps `n + 1 < b^m`.
    #[inline]
    pub(crate) fn step(&mut self) {
        let mut i = 0;
        while self.digits[i] == self.b - 1 {
            self.digits[i] = 0;
            self.r -= (self.b - 1) * self.weights[i];
            i += 1;
        }
        self.digits[i] += 1;
        self.r += self.weights[i];
        self.n += 1;
    }
}
