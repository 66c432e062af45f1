//! `S(N)` from the base-`b` digits of `N`, exact moments of `S(N)` over a
//! full digit block, and weakly dependent families of digit functions.
//!
//! With `N = Σ a_i b^{i-1}`,
//!
//! ```text
//! S(N) = Σ_i ((b+1)a_i − a_i²)/(2b) − Σ_{i<j} a_i a_j / b^{j−i+1}.
//! ```
//!
//! The inner sum `Σ_{i<j} a_i b^{i−1−j}` equals `L_j / b^j` where `L_j` is
//! the value of the digits below position `j`, so one pass from the least
//! significant digit up evaluates the double sum in O(m).

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numeric::to_f64;
use crate::radix_core::{Base, DigitVec, ExactRational};

/// Largest block `b^m` enumerated exhaustively.
pub const ENUMERATION_CAP: u64 = 1_000_000;

/// Centering and per-digit variance constants `c(b)` and `d(b)`.
///
/// Exhaustive enumeration shows the per-digit growth of `Var S(N)` is
/// `(b⁴ − 1)/(720 b²)`, which agrees with `d_b` at `b = 2` only; see
/// [`variance_drift`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentConstants {
    pub base: Base,
    /// `(b² − 1)/(12 b)`
    pub c_b: ExactRational,
    /// `(b⁴ + 120b³ − 480b² + 600b − 241)/(720 b²)`
    pub d_b: ExactRational,
}

impl MomentConstants {
    pub fn new(base: Base) -> Self {
        let b = BigInt::from(base.get());
        let b2 = &b * &b;
        let b3 = &b2 * &b;
        let b4 = &b3 * &b;
        let c_b = ExactRational::new(&b2 - 1, &b * 12);
        let d_num = b4 + b3 * 120 - &b2 * 480 + &b * 600 - 241;
        let d_b = ExactRational::new(d_num, b2 * 720);
        MomentConstants { base, c_b, d_b }
    }

    pub fn c(&self) -> f64 {
        to_f64(&self.c_b)
    }

    pub fn d(&self) -> f64 {
        to_f64(&self.d_b)
    }
}

/// `2·b^m·S(N)` for the digit slice `a_1..a_m`, in whatever integer type fits.
///
/// Recursion on the number of low digits `j`:
/// `T_j = b·T_{j−1} + ((b+1)a_j − a_j²)·b^{j−1} − 2·a_j·L_j`, with
/// `L_j = Σ_{i<j} a_i b^{i−1}` carried along.
fn s_scaled<T>(digits: &[u64], b: u64) -> Option<T>
where
    T: Clone + Zero + One + FromPrimitive + CheckedAdd + CheckedSub + CheckedMul,
{
    let bt = T::from_u64(b)?;
    let mut t = T::zero();
    let mut low = T::zero();
    let mut pw = T::one();
    for &a in digits {
        let at = T::from_u64(a)?;
        let diag = bt
            .checked_add(&T::one())?
            .checked_sub(&at)?
            .checked_mul(&at)?
            .checked_mul(&pw)?;
        let cross = at.checked_mul(&low)?.checked_mul(&T::from_u64(2)?)?;
        t = t.checked_mul(&bt)?.checked_add(&diag)?.checked_sub(&cross)?;
        low = low.checked_add(&at.checked_mul(&pw)?)?;
        pw = pw.checked_mul(&bt)?;
    }
    Some(t)
}

/// `2·b^m·S(N)` as `i128` for `N` zero-padded to `m` digits, if it fits.
pub(crate) fn s_scaled_i128(n: u64, base: Base, m: u32) -> Option<i128> {
    let b = base.get();
    let mut digits = [0u64; 64];
    let mut k = n;
    for d in digits.iter_mut().take(m as usize) {
        *d = k % b;
        k /= b;
    }
    debug_assert_eq!(k, 0);
    s_scaled::<i128>(&digits[..m as usize], b)
}

/// `S(N)` from the digits of `N`, in O(m).
pub fn s_of_n_digits(digits: &DigitVec) -> ExactRational {
    let b = digits.base().get();
    let m = digits.len() as u32;
    let den = BigInt::from(b).pow(m) * 2;
    let num = match s_scaled::<i128>(digits.digits(), b) {
        Some(t) => BigInt::from(t),
        None => s_scaled::<BigInt>(digits.digits(), b).expect("BigInt arithmetic does not overflow"),
    };
    ExactRational::new(num, den)
}

/// `E S(N) = c(b)·m + 1/4 − 1/(4 b^m)` for `N` uniform on `[0, b^m)`.
pub fn expected_s(base: Base, m: u32) -> Result<ExactRational> {
    if m == 0 {
        return Err(Error::domain("m must be >= 1"));
    }
    let c = MomentConstants::new(base).c_b;
    let bm = BigInt::from(base.get()).pow(m);
    Ok(c * ExactRational::from_integer(m.into()) + ExactRational::new(1.into(), 4.into())
        - ExactRational::new(1.into(), bm * 4))
}

/// Mean and central moments of `S(N)`, `N` uniform on `[0, b^m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Moments {
    pub base: Base,
    pub m: u32,
    pub mean: ExactRational,
    /// `central[k − 1]` is the `k`-th central moment.
    pub central: Vec<ExactRational>,
}

impl Moments {
    pub fn variance(&self) -> &ExactRational {
        &self.central[1]
    }

    pub fn central_moment(&self, k: usize) -> Option<&ExactRational> {
        k.checked_sub(1).and_then(|i| self.central.get(i))
    }
}

fn block_size(base: Base, m: u32) -> Result<u64> {
    match base.checked_pow(m) {
        Some(k) if k <= ENUMERATION_CAP => Ok(k),
        other => Err(Error::cap(
            "enumeration b^m",
            other.map(u128::from).unwrap_or(u128::MAX),
            ENUMERATION_CAP,
        )),
    }
}

/// Exact central moments of `S(N)` up to `order`, by enumerating every `N < b^m`.
///
/// Centred on the enumerated mean, not the closed form.
pub fn brute_moments(base: Base, m: u32, order: u32) -> Result<Moments> {
    if m == 0 {
        return Err(Error::domain("m must be >= 1"));
    }
    if order == 0 || order % 2 != 0 {
        return Err(Error::domain("moment order must be a positive even integer"));
    }
    let k = block_size(base, m)?;
    // Every S(N) shares the denominator 2·b^m.
    let values: Vec<i128> = (0..k)
        .map(|n| s_scaled_i128(n, base, m).expect("fits i128 under the enumeration cap"))
        .collect();
    let total: i128 = values.iter().sum();
    let kk = k as i128;
    let den = 2 * base.checked_pow(m).expect("checked above") as i128;

    // S − mean = (T·K − ΣT) / (den·K)
    let mut sums = vec![BigInt::zero(); order as usize];
    for &t in &values {
        let dev = BigInt::from(t * kk - total);
        let mut p = dev.clone();
        sums[0] += &p;
        for s in sums.iter_mut().skip(1) {
            p *= &dev;
            *s += &p;
        }
    }
    let scale = BigInt::from(den) * kk;
    let mut central = Vec::with_capacity(order as usize);
    let mut pw = scale.clone();
    for s in sums {
        central.push(ExactRational::new(s, &pw * kk));
        pw *= &scale;
    }
    Ok(Moments {
        base,
        m,
        mean: ExactRational::new(BigInt::from(total), BigInt::from(den) * kk),
        central,
    })
}

/// `(m, Var_m − d(b)·m)` for `m = 1..=m_max`.
pub fn variance_drift(base: Base, m_max: u32) -> Result<Vec<(u32, ExactRational)>> {
    if m_max == 0 {
        return Err(Error::domain("m_max must be >= 1"));
    }
    block_size(base, m_max)?;
    let d = MomentConstants::new(base).d_b;
    (1..=m_max)
        .map(|m| {
            let var = brute_moments(base, m, 2)?.variance().clone();
            Ok((m, var - &d * ExactRational::from_integer(m.into())))
        })
        .collect()
}

/// `q = (2 / (1 − e^{−c}))^{a + 1/2}`.
pub fn prop8_q(a: u32, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain("decay c must be > 0"));
    }
    if a < 2 {
        return Err(Error::domain("arity a must be >= 2"));
    }
    Ok((2.0 / -(-c).exp_m1()).powf(a as f64 + 0.5))
}

/// `g(x) = Σ_{k≥0} x^{2ak} / (2ak)!`, summed until terms drop below
/// `1e-16` of the partial sum.
pub fn prop8_g(a: u32, x: f64) -> Result<f64> {
    if a < 1 {
        return Err(Error::domain("arity a must be >= 1"));
    }
    if !(x >= 0.0) {
        return Err(Error::domain("g is evaluated at x >= 0"));
    }
    let step = 2 * a as u64;
    let mut sum = 1.0f64;
    let mut term = 1.0f64;
    let mut j = 0u64;
    loop {
        let prev = term;
        for _ in 0..step {
            j += 1;
            term *= x / j as f64;
        }
        sum += term;
        if !term.is_finite() || !sum.is_finite() {
            return Ok(f64::INFINITY);
        }
        if term < prev && term < 1e-16 * sum {
            return Ok(sum);
        }
    }
}

type Evaluator = dyn Fn(&[usize], &[u64]) -> ExactRational + Send + Sync;

/// Functions `f_A` of digit subsets `A ⊆ [m]`, `|A| ≤ a`, over the alphabet
/// `{0, ..., b−1}`, each centred and bounded by `e^{−c·diam A}`.
///
/// Both conditions are verified exhaustively when the family is built.
#[derive(Clone)]
pub struct WeakDepFamily {
    m: usize,
    arity: usize,
    decay: f64,
    base: Base,
    sets: Vec<Vec<usize>>,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for WeakDepFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeakDepFamily")
            .field("m", &self.m)
            .field("arity", &self.arity)
            .field("decay", &self.decay)
            .field("base", &self.base)
            .finish_non_exhaustive()
    }
}

/// All subsets of `{1..m}` of size at most `a`, in lexicographic order by size.
fn subsets_up_to(m: usize, a: usize) -> Vec<Vec<usize>> {
    fn extend(cur: &mut Vec<usize>, from: usize, m: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in from..=m {
            cur.push(i);
            extend(cur, i + 1, m, left - 1, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 0..=a.min(m) {
        extend(&mut Vec::new(), 1, m, size, &mut out);
    }
    out
}

fn diam(set: &[usize]) -> usize {
    match (set.first(), set.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0,
    }
}

/// Calls `f` with every assignment of `len` digits in base `b`.
fn for_each_assignment(len: usize, b: u64, mut f: impl FnMut(&[u64])) {
    let mut x = vec![0u64; len];
    loop {
        f(&x);
        let mut i = 0;
        loop {
            if i == len {
                return;
            }
            x[i] += 1;
            if x[i] < b {
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

impl WeakDepFamily {
    /// `eval(A, x_A)` returns `f_A` at the digits `x_A` (one per element of
    /// `A`, in increasing index order). Indices are 1-based.
    pub fn new<F>(m: usize, arity: usize, decay: f64, base: Base, eval: F) -> Result<Self>
    where
        F: Fn(&[usize], &[u64]) -> ExactRational + Send + Sync + 'static,
    {
        if m < 2 || arity < 2 || arity > m {
            return Err(Error::domain("need 2 <= a <= m"));
        }
        if !(decay > 0.0) {
            return Err(Error::domain("decay c must be > 0"));
        }
        block_size(base, m as u32)?;
        let family = WeakDepFamily {
            m,
            arity,
            decay,
            base,
            sets: subsets_up_to(m, arity),
            eval: Arc::new(eval),
        };
        family.verify()?;
        Ok(family)
    }

    /// The family with every `f_A ≡ 0`.
    pub fn zero(m: usize, arity: usize, decay: f64, base: Base) -> Result<Self> {
        Self::new(m, arity, decay, base, |_, _| ExactRational::zero())
    }

    fn verify(&self) -> Result<()> {
        let b = self.base.get();
        for set in &self.sets {
            let mut total = ExactRational::zero();
            let limit = (-self.decay * diam(set) as f64).exp();
            let mut bad = None;
            for_each_assignment(set.len(), b, |x| {
                let v = (self.eval)(set, x);
                if bad.is_none() && to_f64(&v.abs()) > limit * (1.0 + 1e-12) {
                    bad = Some(v.clone());
                }
                total += v;
            });
            if let Some(v) = bad {
                return Err(Error::Invariant(format!(
                    "|f_{set:?}| = {v} exceeds e^(-c·diam) = {limit}"
                )));
            }
            if !total.is_zero() {
                return Err(Error::Invariant(format!("f_{set:?} is not centred")));
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn eval_set(&self, set: &[usize], x: &[u64]) -> ExactRational {
        (self.eval)(set, x)
    }

    /// `Σ_A f_A(X_A)` at the full assignment `digits` (`digits[i−1]` is `X_i`).
    pub fn sum_at(&self, digits: &[u64]) -> ExactRational {
        let mut buf = Vec::with_capacity(self.arity);
        let mut total = ExactRational::zero();
        for set in &self.sets {
            buf.clear();
            buf.extend(set.iter().map(|&i| digits[i - 1]));
            total += (self.eval)(set, &buf);
        }
        total
    }
}

/// Outcome of checking `E(Σ f_A)^{2k} ≤ q^{2k} (2ak)! m^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentBoundReport {
    pub k: u32,
    pub moment: ExactRational,
    pub bound: f64,
    pub satisfied: bool,
}

/// Exact `2k`-th moment of the family sum over all `b^m` digit assignments,
/// compared against `q^{2k} (2ak)! m^k`. `k ∈ {1, 2}`.
pub fn check_prop8_moment_bound(family: &WeakDepFamily, k: u32) -> Result<MomentBoundReport> {
    if !(1..=2).contains(&k) {
        return Err(Error::domain("k must be 1 or 2"));
    }
    let b = family.base.get();
    let mut acc = ExactRational::zero();
    for_each_assignment(family.m, b, |x| {
        let s = family.sum_at(x);
        acc += num_traits::pow(s, 2 * k as usize);
    });
    let count = BigInt::from(b).pow(family.m as u32);
    let moment = acc / ExactRational::from_integer(count);
    let q = prop8_q(family.arity as u32, family.decay)?;
    let fact: f64 = (1..=2 * family.arity as u64 * k as u64).map(|j| j as f64).product();
    let bound = q.powi(2 * k as i32) * fact * (family.m as f64).powi(k as i32);
    let satisfied = to_f64(&moment) <= bound;
    Ok(MomentBoundReport {
        k,
        moment,
        bound,
        satisfied,
    })
}

/// The family writing `S(N) − E S(N) = (3/4)·b·Σ_A f_A(a_A)`, with `a = 2`
/// and `c = ln 2`:
///
/// * `f_{i}(x) = (4/3b)·[((b+1)x − x²)/(2b) − E((b+1)a_i − a_i²)/(2b)]`
/// * `f_{i,j}(x, y) = −(4/3b)·(xy/b − E(a_i a_j)/b)·b^{−(j−i)}`
pub fn standard_family_for_s(base: Base, m: usize) -> Result<WeakDepFamily> {
    if m < 2 {
        return Err(Error::domain("m must be >= 2"));
    }
    let bi = BigInt::from(base.get());
    let b = base.get() as i64;
    let r = |n: i64, d: i64| ExactRational::new(n.into(), d.into());
    let scale = ExactRational::new(BigInt::from(4), &bi * 3);
    // E a = (b−1)/2, E a² = (b−1)(2b−1)/6
    let mean_a = r(b - 1, 2);
    let mean_a2 = r((b - 1) * (2 * b - 1), 6);
    let diag_mean = (ExactRational::from_integer((b + 1).into()) * &mean_a - &mean_a2)
        / ExactRational::from_integer(BigInt::from(2 * b));
    let pair_mean = &mean_a * &mean_a / ExactRational::from_integer(bi.clone());
    WeakDepFamily::new(m, 2, std::f64::consts::LN_2, base, move |set, x| match set.len() {
        0 => ExactRational::zero(),
        1 => {
            let v = x[0] as i64;
            let diag = ExactRational::new(((b + 1) * v - v * v).into(), (2 * b).into());
            &scale * (diag - &diag_mean)
        }
        2 => {
            let xy = ExactRational::new(BigInt::from(x[0] * x[1]), bi.clone());
            let decay = ExactRational::new(1.into(), bi.pow((set[1] - set[0]) as u32));
            -(&scale * (xy - &pair_mean) * decay)
        }
        _ => unreachable!("arity is 2"),
    })
}

/// Checks `S(N) − E S(N) = (3/4)·b·Σ_A f_A(a_A)` for every `N < b^m`.
pub fn verify_s_family_identity(family: &WeakDepFamily) -> Result<()> {
    let base = family.base();
    let m = family.m() as u32;
    let mean = expected_s(base, m)?;
    let factor = ExactRational::new(BigInt::from(3 * base.get()), 4.into());
    let count = block_size(base, m)?;
    for n in 0..count {
        let digits = DigitVec::padded(n, base, m)?;
        let lhs = s_of_n_digits(&digits) - &mean;
        let rhs = &factor * family.sum_at(digits.digits());
        if lhs != rhs {
            return Err(Error::Invariant(format!(
                "S({n}) − E S = {lhs} but (3/4)·b·Σf_A = {rhs}"
            )));
        }
    }
    Ok(())
}

/// `|E S(N) − c(b)·m| ≤ 1/4`, checked exactly.
pub fn mean_within_quarter(base: Base, m: u32) -> Result<bool> {
    let gap = expected_s(base, m)? - MomentConstants::new(base).c_b * ExactRational::from_integer(m.into());
    Ok(gap.abs() <= ExactRational::new(1.into(), 4.into()))
}

/// Worst change of `S` when one digit of an `m`-digit index changes.
pub fn max_single_digit_change(base: Base, m: u32) -> Result<ExactRational> {
    let count = block_size(base, m)?;
    let b = base.get();
    let den = 2 * count as i128;
    let vals: Vec<i128> = (0..count)
        .map(|n| s_scaled_i128(n, base, m).expect("fits under the enumeration cap"))
        .collect();
    let mut worst = 0i128;
    for n in 0..count {
        let mut w = 1u64;
        for _ in 0..m {
            let digit = (n / w) % b;
            for other in 0..b {
                if other != digit {
                    let n2 = n - digit * w + other * w;
                    worst = worst.max((vals[n as usize] - vals[n2 as usize]).abs());
                }
            }
            w *= b;
        }
    }
    Ok(ExactRational::new(BigInt::from(worst), BigInt::from(den)))
}

/// Converts a moment list to floats, for reports.
pub fn moments_to_f64(m: &Moments) -> Vec<f64> {
    m.central.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::s_of_n_direct;
    use crate::radix_core::digits_of;

    fn q(n: i64, d: i64) -> ExactRational {
        ExactRational::new(n.into(), d.into())
    }

    fn b(v: u64) -> Base {
        Base::new(v).unwrap()
    }

    #[test]
    fn constants_for_base_two() {
        let k = MomentConstants::new(b(2));
        assert_eq!(k.c_b, q(1, 8));
        assert_eq!(k.d_b, q(15, 2880));
        assert_eq!(k.d_b, q(1, 192));
    }

    #[test]
    fn constants_are_positive() {
        for base in 2..2000 {
            let k = MomentConstants::new(b(base));
            assert!(k.c_b > q(0, 1) && k.d_b > q(0, 1), "b = {base}");
        }
    }

    #[test]
    fn s_digit_examples() {
        let d3 = DigitVec::from_digits(b(2), vec![1, 1]).unwrap();
        assert_eq!(s_of_n_digits(&d3), q(3, 4));
        let d4 = DigitVec::from_digits(b(2), vec![0, 0, 1]).unwrap();
        assert_eq!(s_of_n_digits(&d4), q(1, 2));
        assert_eq!(s_of_n_digits(&digits_of(0, b(7))), q(0, 1));
    }

    #[test]
    fn padding_does_not_change_s() {
        for n in 0..200 {
            let canon = s_of_n_digits(&digits_of(n, b(3)));
            let padded = s_of_n_digits(&DigitVec::padded(n, b(3), 9).unwrap());
            assert_eq!(canon, padded);
        }
    }

    #[test]
    fn digit_formula_matches_direct_sum() {
        for base in [2u64, 3, 5, 7, 10] {
            for n in 0..=600 {
                assert_eq!(
                    s_of_n_digits(&digits_of(n, b(base))),
                    s_of_n_direct(n, b(base)).unwrap()
                );
            }
        }
    }

    #[test]
    fn big_indices_fall_back_to_bigint() {
        // b = 2^40 with two digits overflows the i128 fast path.
        let base = b(1 << 40);
        let n = u64::MAX;
        let s = s_of_n_digits(&digits_of(n, base));
        let bf = (1u64 << 40) as f64;
        let a1 = (n % (1 << 40)) as f64;
        let a2 = (n >> 40) as f64;
        let approx = ((bf + 1.0) * a1 - a1 * a1) / (2.0 * bf) + ((bf + 1.0) * a2 - a2 * a2) / (2.0 * bf)
            - a1 * a2 / (bf * bf);
        assert!((to_f64(&s) - approx).abs() <= 1e-9 * approx.abs());
    }

    #[test]
    fn expected_examples() {
        assert_eq!(expected_s(b(2), 1).unwrap(), q(1, 4));
        assert_eq!(expected_s(b(2), 2).unwrap(), q(7, 16));
        assert_eq!(expected_s(b(3), 1).unwrap(), q(7, 18));
        assert!(expected_s(b(2), 0).is_err());
    }

    #[test]
    fn brute_moment_examples() {
        let m = brute_moments(b(2), 1, 4).unwrap();
        assert_eq!(m.mean, q(1, 4));
        assert_eq!(*m.variance(), q(1, 16));
        assert_eq!(m.central_moment(4).unwrap(), &q(1, 256));
        assert_eq!(m.central_moment(1).unwrap(), &q(0, 1));
        // S over N < 4 is {0, 1/2, 1/2, 3/4}.
        let m2 = brute_moments(b(2), 2, 2).unwrap();
        assert_eq!(m2.mean, q(7, 16));
        assert_eq!(*m2.variance(), q(19, 256));
        assert!(brute_moments(b(2), 1, 3).is_err());
        assert!(brute_moments(b(2), 1, 0).is_err());
        assert!(matches!(brute_moments(b(10), 7, 2), Err(Error::ResourceCap { .. })));
    }

    #[test]
    fn brute_mean_matches_closed_form() {
        for (base, mmax) in [(2u64, 10u32), (3, 7), (5, 5)] {
            for m in 1..=mmax {
                let mom = brute_moments(b(base), m, 2).unwrap();
                assert_eq!(mom.mean, expected_s(b(base), m).unwrap());
                assert!(mean_within_quarter(b(base), m).unwrap());
            }
        }
    }

    #[test]
    fn drift_has_requested_length() {
        assert_eq!(variance_drift(b(2), 6).unwrap().len(), 6);
        assert!(variance_drift(b(2), 0).is_err());
    }

    #[test]
    fn base_two_increments_converge_to_d() {
        let drift = variance_drift(b(2), 12).unwrap();
        let incs: Vec<f64> = drift.windows(2).map(|w| to_f64(&(&w[1].1 - &w[0].1))).collect();
        // |Var_{m+1} − Var_m − d(2)| decreases from m = 3 on.
        for w in incs[2..].windows(2) {
            assert!(w[1].abs() < w[0].abs());
        }
        assert!(incs.last().unwrap().abs() < 2e-4);
    }

    #[test]
    fn enumerated_variance_slope_is_b4_minus_1_over_720b2() {
        for (base, mmax) in [(3u64, 9u32), (5u64, 6)] {
            let bf = base as f64;
            let slope = (bf.powi(4) - 1.0) / (720.0 * bf * bf);
            let v1 = to_f64(brute_moments(b(base), mmax - 1, 2).unwrap().variance());
            let v2 = to_f64(brute_moments(b(base), mmax, 2).unwrap().variance());
            assert!(((v2 - v1) - slope).abs() < 1e-3 * slope.max(1.0), "b = {base}");
            let printed = MomentConstants::new(b(base)).d();
            assert!(((v2 - v1) - printed).abs() > 1e-2);
        }
    }

    #[test]
    fn q_examples() {
        assert!((prop8_q(2, std::f64::consts::LN_2).unwrap() - 32.0).abs() < 1e-12);
        assert!((prop8_q(3, std::f64::consts::LN_2).unwrap() - 128.0).abs() < 1e-10);
        assert!((prop8_q(2, 50.0).unwrap() - 2f64.powf(2.5)).abs() < 1e-12);
        assert!(prop8_q(2, 0.0).is_err());
        assert!(prop8_q(2, -1.0).is_err());
    }

    #[test]
    fn g_examples() {
        assert_eq!(prop8_g(2, 0.0).unwrap(), 1.0);
        for x in [0.1f64, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
            let closed = (x.exp() + (-x).exp()) / 4.0 + x.cos() / 2.0;
            let g = prop8_g(2, x).unwrap();
            assert!((g - closed).abs() <= 1e-12 * closed, "x = {x}");
            assert!(g >= (x.exp() - 2.0) / 4.0);
        }
        // a = 1 is cosh.
        assert!((prop8_g(1, 3.0).unwrap() - 3f64.cosh()).abs() < 1e-12 * 3f64.cosh());
        assert!(prop8_g(2, -1.0).is_err());
    }

    #[test]
    fn subsets_are_complete() {
        let s = subsets_up_to(4, 2);
        assert_eq!(s.len(), 1 + 4 + 6);
        assert_eq!(s[0], Vec::<usize>::new());
        assert!(s.contains(&vec![1, 4]));
        assert_eq!(diam(&[2, 5]), 3);
    }

    #[test]
    fn zero_family_moment_is_zero() {
        let fam = WeakDepFamily::zero(4, 2, 1.0, b(2)).unwrap();
        for k in [1, 2] {
            let r = check_prop8_moment_bound(&fam, k).unwrap();
            assert_eq!(r.moment, q(0, 1));
            assert!(r.satisfied);
        }
        assert!(check_prop8_moment_bound(&fam, 3).is_err());
    }

    #[test]
    fn family_conditions_are_enforced() {
        let uncentred = WeakDepFamily::new(3, 2, 1.0, b(2), |set, _| {
            if set.len() == 1 { q(1, 2) } else { q(0, 1) }
        });
        assert!(matches!(uncentred, Err(Error::Invariant(_))));
        let too_big = WeakDepFamily::new(3, 2, 1.0, b(2), |set, x| {
            if set.len() == 2 && set[1] - set[0] == 2 {
                if x[0] == 0 { q(1, 1) } else { q(-1, 1) }
            } else {
                q(0, 1)
            }
        });
        assert!(matches!(too_big, Err(Error::Invariant(_))));
        assert!(WeakDepFamily::zero(1, 2, 1.0, b(2)).is_err());
        assert!(WeakDepFamily::zero(3, 2, 0.0, b(2)).is_err());
    }

    #[test]
    fn standard_family_identity_small() {
        for base in 2..=5u64 {
            let fam = standard_family_for_s(b(base), 3).unwrap();
            verify_s_family_identity(&fam).unwrap();
            assert_eq!(fam.eval_set(&[], &[]), q(0, 1));
        }
        let fam = standard_family_for_s(b(2), 2).unwrap();
        verify_s_family_identity(&fam).unwrap();
        assert!(standard_family_for_s(b(2), 1).is_err());
    }

    #[test]
    fn standard_family_pair_bound() {
        for base in 2..=5u64 {
            let fam = standard_family_for_s(b(base), 4).unwrap();
            for set in fam.sets().iter().filter(|s| s.len() == 2) {
                let limit = 0.5f64.powi(diam(set) as i32);
                for x in 0..base {
                    for y in 0..base {
                        assert!(to_f64(&fam.eval_set(set, &[x, y]).abs()) <= limit);
                    }
                }
            }
        }
    }

    #[test]
    fn standard_family_moment_bound_m4() {
        let fam = standard_family_for_s(b(2), 4).unwrap();
        let r1 = check_prop8_moment_bound(&fam, 1).unwrap();
        assert!(r1.satisfied);
        assert!((r1.bound - 32f64.powi(2) * 24.0 * 4.0).abs() < 1e-6);
        let r2 = check_prop8_moment_bound(&fam, 2).unwrap();
        assert!(r2.satisfied);
        assert!((r2.bound - 32f64.powi(4) * 40320.0 * 16.0).abs() < 1e-3 * r2.bound);
        // Second moment of the family is Var S / ((3/4)·b)².
        let var = brute_moments(b(2), 4, 2).unwrap().variance().clone();
        assert_eq!(r1.moment, var / q(9, 4));
    }

    #[test]
    fn single_digit_change_bound() {
        for base in [2u64, 3] {
            let bf = base as f64;
            let limit = (bf + 1.0).powi(2) / (8.0 * bf) + 2.0;
            for m in 1..=6 {
                let worst = max_single_digit_change(b(base), m).unwrap();
                assert!(to_f64(&worst) <= limit);
            }
        }
    }
}
