//! The discrepancy function `Δ_N(x) = #{n < N : x_n < x} − N·x` as an exact
//! piecewise-linear profile.
//!
//! All points of a prefix share the denominator `D = b^m`, so the profile
//! stores integer numerators only. Between consecutive breakpoints
//! `y_j < y_{j+1}` exactly `j` points lie strictly to the left, hence
//! `Δ_N(x) = j − N·x` there. `Δ_N` jumps by +1 at each breakpoint and is
//! left-continuous (the defining inequality is strict).

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::radix_core::{radical_inverse_scaled, Base, ExactRational, PREFIX_CAP};

/// Sorted prefix of the sequence, with the linear pieces of `Δ_N` implied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscrepancyProfile {
    n: u64,
    base: Base,
    m: u32,
    denom: u64,
    /// Numerators of the sorted points over `denom`.
    points: Vec<u64>,
}

/// One linear piece `(y_j, y_{j+1})` on which `Δ_N = count − N·x`.
///
/// Endpoint values are scaled by the profile denominator `D`: `left` is the
/// right limit `D·Δ(y_j+)`, `right` the left limit `D·Δ(y_{j+1}−)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub count: u64,
    pub left_num: u64,
    pub right_num: u64,
    pub left: i128,
    pub right: i128,
}

impl Segment {
    pub fn width_num(&self) -> u64 {
        self.right_num - self.left_num
    }
}

fn denominator(base: Base, m: u32) -> Result<u64> {
    base.checked_pow(m)
        .ok_or_else(|| Error::cap("denominator b^m", u128::from(base.get()).saturating_pow(m), u64::MAX))
}

/// Builds `Δ_N` for the first `N ≥ 1` points.
pub fn build_profile(n: u64, base: Base) -> Result<DiscrepancyProfile> {
    if n == 0 {
        return Err(Error::domain("profile needs N >= 1"));
    }
    if n > PREFIX_CAP {
        return Err(Error::cap("discrepancy profile", n, PREFIX_CAP));
    }
    let m = base.digits_to_cover(n);
    let denom = denominator(base, m)?;
    let mut points: Vec<u64> = (0..n).map(|i| radical_inverse_scaled(i, base, m)).collect();
    points.sort_unstable();
    Ok(DiscrepancyProfile {
        n,
        base,
        m,
        denom,
        points,
    })
}

impl DiscrepancyProfile {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn base(&self) -> Base {
        self.base
    }

    /// Shared denominator `b^m` of the breakpoints.
    pub fn denom(&self) -> u64 {
        self.denom
    }

    /// Sorted breakpoint numerators over [`Self::denom`].
    pub fn numerators(&self) -> &[u64] {
        &self.points
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = ExactRational> + '_ {
        let d = BigInt::from(self.denom);
        self.points
            .iter()
            .map(move |&r| ExactRational::new(BigInt::from(r), d.clone()))
    }

    /// Count of points in the open segment `j`, for `j ∈ [0, N]`.
    pub fn count(&self, j: usize) -> u64 {
        assert!(j as u64 <= self.n);
        j as u64
    }

    /// Every jump of `Δ_N` has height one.
    pub fn jump(&self) -> u64 {
        1
    }

    /// The `N + 1` linear pieces, left to right. The first piece `(0, y_1)`
    /// is empty because `x_0 = 0`.
    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let d = self.denom as i128;
        let n = self.n as i128;
        (0..=self.points.len()).map(move |j| {
            let left_num = if j == 0 { 0 } else { self.points[j - 1] };
            let right_num = if j == self.points.len() {
                self.denom
            } else {
                self.points[j]
            };
            let c = j as i128;
            Segment {
                count: j as u64,
                left_num,
                right_num,
                left: c * d - n * left_num as i128,
                right: c * d - n * right_num as i128,
            }
        })
    }

    /// Appends `x_N`, turning the profile for `N` into the one for `N + 1`.
    pub fn advance(&mut self) -> Result<()> {
        if self.n >= PREFIX_CAP {
            return Err(Error::cap("discrepancy profile", self.n + 1, PREFIX_CAP));
        }
        let m = self.base.digits_to_cover(self.n + 1);
        if m > self.m {
            let scale = denominator(self.base, m - self.m)?;
            self.denom = denominator(self.base, m)?;
            for r in &mut self.points {
                *r *= scale;
            }
            self.m = m;
        }
        let r = radical_inverse_scaled(self.n, self.base, self.m);
        let at = self.points.partition_point(|&p| p < r);
        self.points.insert(at, r);
        self.n += 1;
        Ok(())
    }

    /// Number of points strictly below `x`.
    fn count_below(&self, x: &ExactRational) -> u64 {
        let d = BigInt::from(self.denom);
        let lhs = x.numer() * &d;
        // r/D < p/q  ⇔  r·q < p·D
        self.points
            .partition_point(|&r| BigInt::from(r) * x.denom() < lhs) as u64
    }
}

fn unit_interval_check(x: &ExactRational) -> Result<()> {
    if x.is_negative() || *x > ExactRational::one() {
        return Err(Error::domain(format!("x = {x} outside [0, 1]")));
    }
    Ok(())
}

/// Exact `Δ_N(x)` for `0 ≤ x ≤ 1`.
pub fn eval_delta(profile: &DiscrepancyProfile, x: &ExactRational) -> Result<ExactRational> {
    unit_interval_check(x)?;
    let count = ExactRational::from_integer(BigInt::from(profile.count_below(x)));
    Ok(count - x * ExactRational::from_integer(BigInt::from(profile.n)))
}

/// Right limit `Δ_N(x+)` for `0 ≤ x < 1`.
pub fn eval_delta_right(profile: &DiscrepancyProfile, x: &ExactRational) -> Result<ExactRational> {
    unit_interval_check(x)?;
    if x.is_one() {
        return Err(Error::domain("no right limit at x = 1"));
    }
    let mut v = eval_delta(profile, x)?;
    let d = BigInt::from(profile.denom);
    let scaled = x * ExactRational::from_integer(d.clone());
    if scaled.is_integer() {
        let r = scaled.to_integer();
        if profile
            .points
            .binary_search_by(|&p| BigInt::from(p).cmp(&r))
            .is_ok()
        {
            v += ExactRational::one();
        }
    }
    Ok(v)
}

/// `S(N) = Σ_{n<N} (1/2 − x_n)` by direct summation.
pub fn s_of_n_direct(n: u64, base: Base) -> Result<ExactRational> {
    if n == 0 {
        return Ok(ExactRational::zero());
    }
    if n > PREFIX_CAP {
        return Err(Error::cap("direct summation", n, PREFIX_CAP));
    }
    let m = base.digits_to_cover(n);
    let d = denominator(base, m)?;
    let sum: u128 = (0..n)
        .map(|i| radical_inverse_scaled(i, base, m) as u128)
        .sum();
    // N/2 − Σr/D = (N·D − 2Σr) / 2D
    let num = BigInt::from(n) * BigInt::from(d) - BigInt::from(sum) * 2;
    Ok(ExactRational::new(num, BigInt::from(d) * 2))
}

/// `∫_0^1 Δ_N(x) dx`, integrating each linear piece exactly.
pub fn integral_delta(profile: &DiscrepancyProfile) -> ExactRational {
    // Trapezoid per piece, exact for linear functions:
    //   Σ (left + right)/D · width/D / 2
    let mut acc = BigInt::zero();
    for seg in profile.segments() {
        let w = seg.width_num();
        if w == 0 {
            continue;
        }
        acc += BigInt::from(seg.left + seg.right) * BigInt::from(w);
    }
    let d = BigInt::from(profile.denom);
    ExactRational::new(acc, &d * &d * 2)
}

/// `∫_0^1 (Δ_N(x) − shift)^power dx`, exact.
///
/// On each piece `v(x) = count − shift − N·x` is linear with slope `−N`, so
/// the piece contributes `(v_left^{p+1} − v_right^{p+1}) / (N (p+1))`.
pub fn integral_delta_against_poly(
    profile: &DiscrepancyProfile,
    shift: &ExactRational,
    power: u32,
) -> Result<ExactRational> {
    if power == 0 {
        return Err(Error::domain("power must be >= 1"));
    }
    let d = BigInt::from(profile.denom);
    let s_num = shift.numer();
    let s_den = shift.denom();
    let offset = s_num * &d;
    // Values scaled by D·s_den.
    let mut acc = BigInt::zero();
    for seg in profile.segments() {
        if seg.width_num() == 0 {
            continue;
        }
        let vl = BigInt::from(seg.left) * s_den - &offset;
        let vr = BigInt::from(seg.right) * s_den - &offset;
        acc += vl.pow(power + 1) - vr.pow(power + 1);
    }
    let q = d * s_den;
    let den = q.pow(power + 1) * BigInt::from(profile.n) * BigInt::from(power + 1);
    Ok(ExactRational::new(acc, den))
}

/// Largest one-sided value of `Δ_N`, scaled by `D` (numerator over [`DiscrepancyProfile::denom`]).
pub(crate) fn max_scaled(profile: &DiscrepancyProfile) -> i128 {
    profile
        .segments()
        .filter(|s| s.width_num() > 0)
        .map(|s| s.left.max(s.right))
        .max()
        .unwrap_or(0)
}
