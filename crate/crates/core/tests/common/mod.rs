//! Independent oracles. Nothing here calls the crate's own formulas for the
//! quantity being checked.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Base-`b` digits of `n`, least significant first.
pub fn digits(mut n: u64, b: u64) -> Vec<u64> {
    let mut out = Vec::new();
    while n > 0 {
        out.push(n % b);
        n /= b;
    }
    out
}

/// `x_n` by reversing digits across the radix point.
pub fn vdc(n: u64, b: u64) -> BigRational {
    let mut num = BigInt::zero();
    let mut den = BigInt::from(1);
    for d in digits(n, b) {
        num = num * b + d;
        den *= b;
    }
    BigRational::new(num, den)
}

/// `S(N) = Σ_{n<N} (1/2 − x_n)` term by term.
pub fn s_by_summation(n: u64, b: u64) -> BigRational {
    let half = q(1, 2);
    (0..n).fold(BigRational::zero(), |acc, i| acc + &half - vdc(i, b))
}

/// The digit double sum written out literally, O(m²):
/// `Σ_i ((b+1)a_i − a_i²)/(2b) − Σ_{i<j} a_i a_j / b^{j−i+1}`.
pub fn s_literal_double_sum(n: u64, b: u64) -> BigRational {
    let a: Vec<BigInt> = digits(n, b).into_iter().map(BigInt::from).collect();
    let bb = BigInt::from(b);
    let mut total = BigRational::zero();
    for ai in &a {
        total += BigRational::new((&bb + 1) * ai - ai * ai, &bb * 2);
    }
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            total -= BigRational::new(&a[i] * &a[j], bb.pow((j - i + 1) as u32));
        }
    }
    total
}

/// `Δ_N(x)` by counting points below `x`.
pub fn delta_by_counting(n: u64, b: u64, x: &BigRational) -> BigRational {
    let below = (0..n).filter(|&i| vdc(i, b) < *x).count();
    BigRational::from_integer(below.into()) - BigRational::from_integer(n.into()) * x
}

/// Sorted points of the first `N` terms, as `f64`.
pub fn sorted_points_f64(n: u64, b: u64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let mut x = 0.0;
            let mut w = 1.0 / b as f64;
            for d in digits(i, b) {
                x += d as f64 * w;
                w /= b as f64;
            }
            x
        })
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol.max(1e-15 * (left + right).abs()) {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 30)
}

/// `∫_0^1 |Δ_N|^p` by adaptive quadrature on each gap between points.
pub fn lp_by_quadrature(n: u64, b: u64, p: f64) -> f64 {
    let pts = sorted_points_f64(n, b);
    let mut total = 0.0;
    for j in 0..pts.len() {
        let lo = pts[j];
        let hi = if j + 1 < pts.len() { pts[j + 1] } else { 1.0 };
        if hi <= lo {
            continue;
        }
        let c = (j + 1) as f64;
        let f = move |x: f64| (c - n as f64 * x).abs().powf(p);
        let scale = f(lo).max(f(hi)) * (hi - lo);
        total += adaptive_simpson(&f, lo, hi, 1e-12 * scale);
    }
    total
}
