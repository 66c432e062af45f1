//! `L^p` and sup norms of `Δ_N`.
//!
//! `Δ_N ≥ 0`, so `|Δ_N|^p = Δ_N^p` and on a piece with slope `−N`
//! `∫ Δ^p = (u_left^{p+1} − u_right^{p+1}) / (N (p+1))`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::discrepancy::{integral_delta, integral_delta_against_poly, max_scaled, DiscrepancyProfile};
use crate::error::{Error, Result};
use crate::numeric::{to_f64, Neumaier};
use crate::radix_core::ExactRational;

pub const MAX_P: f64 = 64.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum LpOrder {
    Finite(f64),
    Inf,
}

impl fmt::Display for LpOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpOrder::Finite(p) => write!(f, "{p}"),
            LpOrder::Inf => f.write_str("inf"),
        }
    }
}

/// Which path produced an [`LpValue`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    /// `∫Δ^p` is an exact rational; only the final root is rounded.
    ExactRational,
    /// Per-piece closed form in floating point.
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpValue {
    pub p: LpOrder,
    pub value: f64,
    pub exactness: Exactness,
    /// `∫Δ^p` when it was computed exactly.
    pub integral: Option<ExactRational>,
}

fn check_p(p: f64) -> Result<()> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::domain("p must be a finite real >= 1"));
    }
    if p > MAX_P {
        return Err(Error::domain(format!("p must be <= {MAX_P}")));
    }
    Ok(())
}

/// `Σ_pieces (l^k − r^k)` over the scaled endpoint values, exact.
fn endpoint_power_diff(profile: &DiscrepancyProfile, k: u32) -> BigInt {
    let fast = (|| {
        let mut acc = 0i128;
        for seg in profile.segments().filter(|s| s.width_num() > 0) {
            let l = seg.left.checked_pow(k)?;
            let r = seg.right.checked_pow(k)?;
            acc = acc.checked_add(l.checked_sub(r)?)?;
        }
        Some(acc)
    })();
    if let Some(v) = fast {
        return BigInt::from(v);
    }
    let mut acc = BigInt::zero();
    for seg in profile.segments().filter(|s| s.width_num() > 0) {
        acc += BigInt::from(seg.left).pow(k) - BigInt::from(seg.right).pow(k);
    }
    acc
}

/// `∫_0^1 Δ_N^k` for a positive integer `k`, exact.
pub fn integral_delta_power(profile: &DiscrepancyProfile, k: u32) -> Result<ExactRational> {
    if k == 0 {
        return Err(Error::domain("power must be >= 1"));
    }
    let num = endpoint_power_diff(profile, k + 1);
    let d = BigInt::from(profile.denom());
    let den = d.pow(k + 1) * BigInt::from(profile.n()) * BigInt::from(k + 1);
    Ok(ExactRational::new(num, den))
}

/// `‖Δ_N‖_p`. Integer `p` goes through the exact rational integral; other
/// `p` through [`lp_norm_closed_form`].
pub fn lp_norm(profile: &DiscrepancyProfile, p: f64) -> Result<LpValue> {
    check_p(p)?;
    if p.fract() == 0.0 {
        let integral = integral_delta_power(profile, p as u32)?;
        let value = to_f64(&integral).powf(1.0 / p);
        return Ok(LpValue {
            p: LpOrder::Finite(p),
            value,
            exactness: Exactness::ExactRational,
            integral: Some(integral),
        });
    }
    lp_norm_closed_form(profile, p)
}

/// `‖Δ_N‖_p` from the per-piece antiderivative in floating point.
///
/// Each piece is evaluated as `u_l^{p+1}·(1 − (u_r/u_l)^{p+1})` with the
/// ratio taken through `ln_1p` of the exact integer difference, which keeps
/// full relative precision on short pieces.
pub fn lp_norm_closed_form(profile: &DiscrepancyProfile, p: f64) -> Result<LpValue> {
    check_p(p)?;
    let d = profile.denom() as f64;
    let n = profile.n() as f64;
    let e = p + 1.0;
    let mut acc = Neumaier::new();
    for seg in profile.segments().filter(|s| s.width_num() > 0) {
        if seg.left <= 0 {
            continue;
        }
        let ul = seg.left as f64 / d;
        // r − l = −N·width, exact in integers
        let rel = -((seg.left - seg.right) as f64) / seg.left as f64;
        let top = ul.powf(e);
        let piece = if rel <= -1.0 {
            top
        } else {
            -top * (e * rel.ln_1p()).exp_m1()
        };
        acc.add(piece);
    }
    let integral = acc.value() / (n * e);
    Ok(LpValue {
        p: LpOrder::Finite(p),
        value: integral.max(0.0).powf(1.0 / p),
        exactness: Exactness::ClosedForm,
        integral: None,
    })
}

/// Exact essential supremum of `Δ_N`, over both one-sided limits at every breakpoint.
pub fn sup_norm_exact(profile: &DiscrepancyProfile) -> ExactRational {
    ExactRational::new(max_scaled(profile).into(), profile.denom().into())
}

pub fn sup_norm(profile: &DiscrepancyProfile) -> f64 {
    max_scaled(profile) as f64 / profile.denom() as f64
}

/// `‖Δ_N‖_∞` as an [`LpValue`].
pub fn sup_norm_value(profile: &DiscrepancyProfile) -> LpValue {
    let exact = sup_norm_exact(profile);
    LpValue {
        p: LpOrder::Inf,
        value: to_f64(&exact),
        exactness: Exactness::ExactRational,
        integral: Some(exact),
    }
}

/// `∫(Δ_N − S(N))² = ∫Δ_N² − S(N)²`, exact.
pub fn l2_remainder(profile: &DiscrepancyProfile) -> ExactRational {
    let s = integral_delta(profile);
    let sq = integral_delta_power(profile, 2).expect("power 2 is valid");
    sq - &s * &s
}

/// `(b²/12)(log_b N + 1)`, the bound on [`l2_remainder`].
pub fn l2_remainder_bound(profile: &DiscrepancyProfile) -> f64 {
    let b = profile.base().get() as f64;
    b * b / 12.0 * (profile.base().log(profile.n() as f64) + 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpMinusSReport {
    pub p: u32,
    /// `∫Δ^p − S(N)^p`
    pub difference: ExactRational,
    /// `b^p (log_b N + 1)^{p−1}`
    pub scale: f64,
    pub ratio: f64,
}

/// Compares `∫Δ_N^p` with `S(N)^p` for even `p ≥ 2`.
pub fn lp_minus_s_bound_report(profile: &DiscrepancyProfile, p: u32) -> Result<LpMinusSReport> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::domain("p must be an even integer >= 2"));
    }
    let s = integral_delta(profile);
    let difference = integral_delta_power(profile, p)? - num_traits::pow(s, p as usize);
    let b = profile.base().get() as f64;
    let scale = b.powi(p as i32) * (profile.base().log(profile.n() as f64) + 1.0).powi(p as i32 - 1);
    Ok(LpMinusSReport {
        p,
        ratio: to_f64(&difference) / scale,
        difference,
        scale,
    })
}

/// Exact `∫(Δ_N − shift)^k`, for callers that need a centred moment.
pub fn centred_power_integral(profile: &DiscrepancyProfile, shift: &ExactRational, k: u32) -> Result<ExactRational> {
    integral_delta_against_poly(profile, shift, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::build_profile;
    use crate::Base;

    fn q(n: i64, d: i64) -> ExactRational {
        ExactRational::new(n.into(), d.into())
    }

    fn prof(n: u64, b: u64) -> DiscrepancyProfile {
        build_profile(n, Base::new(b).unwrap()).unwrap()
    }

    #[test]
    fn single_point_norms() {
        let p = prof(1, 2);
        let l1 = lp_norm(&p, 1.0).unwrap();
        assert_eq!(l1.integral.unwrap(), q(1, 2));
        assert_eq!(l1.value, 0.5);
        let l2 = lp_norm(&p, 2.0).unwrap();
        assert_eq!(l2.integral.unwrap(), q(1, 3));
        assert!((l2.value - 0.5773502691896258).abs() < 1e-15);
        let l4 = lp_norm(&p, 4.0).unwrap();
        assert!((l4.value - 0.2f64.powf(0.25)).abs() < 1e-15);
        assert!((l4.value - 0.6687403).abs() < 1e-7);
    }

    #[test]
    fn p_validation() {
        let p = prof(5, 2);
        for bad in [0.5, 0.0, -1.0, f64::NAN, f64::INFINITY, 64.5] {
            assert!(lp_norm(&p, bad).is_err(), "p = {bad}");
            assert!(lp_norm_closed_form(&p, bad).is_err());
        }
        assert!(lp_norm(&p, 64.0).is_ok());
    }

    #[test]
    fn sup_examples() {
        assert_eq!(sup_norm(&prof(1, 2)), 1.0);
        // Δ_2 = 1 − 2x on (0, 1/2], so the right limit at 0 is 1.
        assert_eq!(sup_norm(&prof(2, 2)), 1.0);
        assert_eq!(sup_norm_exact(&prof(2, 2)), q(1, 1));
        assert_eq!(sup_norm_exact(&prof(3, 2)), q(3, 2));
        assert_eq!(sup_norm_value(&prof(3, 2)).p, LpOrder::Inf);
    }

    #[test]
    fn sup_envelope() {
        for b in [2u64, 3, 5, 10] {
            let base = Base::new(b).unwrap();
            for n in 1..=700 {
                let env = b as f64 / 4.0 * base.log(n as f64) + b as f64;
                assert!(sup_norm(&prof(n, b)) <= env);
            }
        }
    }

    #[test]
    fn l1_is_s() {
        for n in 1..200 {
            let p = prof(n, 3);
            assert_eq!(lp_norm(&p, 1.0).unwrap().integral.unwrap(), integral_delta(&p));
        }
    }

    #[test]
    fn closed_form_matches_exact_for_even_p() {
        for b in [2u64, 3, 5] {
            for n in [1u64, 2, 7, 64, 100, 333, 1000] {
                let pr = prof(n, b);
                for p in [2.0, 4.0, 6.0] {
                    let exact = lp_norm(&pr, p).unwrap().value;
                    let cf = lp_norm_closed_form(&pr, p).unwrap().value;
                    assert!((exact - cf).abs() <= 1e-12 * exact, "n={n} b={b} p={p}");
                }
            }
        }
    }

    #[test]
    fn monotone_in_p() {
        for n in [1u64, 5, 77, 500] {
            let pr = prof(n, 2);
            let mut last = 0.0;
            for p in [1.0, 1.5, 2.0, 3.5, 4.0, 8.0, 20.0, 64.0] {
                let v = lp_norm(&pr, p).unwrap().value;
                assert!(v + 1e-12 >= last);
                last = v;
            }
            assert!(sup_norm(&pr) + 1e-12 >= last);
        }
    }

    #[test]
    fn lp_minus_s_examples() {
        let r = lp_minus_s_bound_report(&prof(1, 2), 2).unwrap();
        assert_eq!(r.difference, q(1, 12));
        assert_eq!(r.scale, 4.0);
        assert!(lp_minus_s_bound_report(&prof(1, 2), 3).is_err());
        assert!(lp_minus_s_bound_report(&prof(1, 2), 0).is_err());
    }

    #[test]
    fn lp_minus_s_ratio_p2_bounded() {
        // ∫Δ² − S² = ∫(Δ − S)² ≤ (b²/12)(log_b N + 1), so the ratio is at most 1/12.
        let mut pr = prof(1, 2);
        let mut worst = 0.0f64;
        for _ in 1..=4096 {
            let r = lp_minus_s_bound_report(&pr, 2).unwrap();
            assert!(r.ratio > 0.0 && r.ratio.is_finite());
            worst = worst.max(r.ratio);
            pr.advance().unwrap();
        }
        assert!(worst <= 1.0 / 12.0);
    }

    #[test]
    fn l2_remainder_matches_centred_integral() {
        for n in [1u64, 3, 10, 99] {
            let pr = prof(n, 5);
            let s = integral_delta(&pr);
            assert_eq!(l2_remainder(&pr), centred_power_integral(&pr, &s, 2).unwrap());
        }
    }

    #[test]
    fn large_power_falls_back_to_bigint() {
        let pr = prof(3000, 7);
        let v = lp_norm(&pr, 12.0).unwrap();
        let cf = lp_norm_closed_form(&pr, 12.0).unwrap();
        assert!((v.value - cf.value).abs() <= 1e-12 * v.value);
    }
}
