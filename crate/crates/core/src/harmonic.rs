//! Exponential sums over the sequence, Fourier coefficients of `Δ_N`, and the
//! quasi-Monte-Carlo error decomposition
//! `Σ f(x_n) = N∫f − (f(1) − f(0))·S(N) + remainder`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::discrepancy::DiscrepancyProfile;
use crate::error::{Error, Result};
use crate::numeric::{to_f64, unit_phase, ComplexNeumaier, Neumaier};
use crate::radix_core::{Base, ExactRational, RadicalCounter, PREFIX_CAP};

/// Slack for the strict bound `|Σ e(ℓ x_n)| < b^{s_min}` against rounding.
pub const EXP_SUM_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ExpSumResult {
    pub ell: i64,
    pub n: u64,
    pub base: Base,
    pub value: Complex64,
    /// `v_b(ℓ) + 1`
    pub s_min: u32,
    /// `b^{s_min}`
    pub bound: f64,
}

impl ExpSumResult {
    pub fn within_bound(&self) -> bool {
        self.value.norm() - EXP_SUM_SLACK < self.bound
    }
}

fn check_sum_args(ell: i64, n: u64) -> Result<()> {
    if ell == 0 {
        return Err(Error::domain("ell must be nonzero"));
    }
    if n == 0 {
        return Err(Error::domain("N must be >= 1"));
    }
    if n > PREFIX_CAP {
        return Err(Error::cap("exponential sum length N", n, PREFIX_CAP));
    }
    Ok(())
}

/// Calls `f(n, e^{2πiℓ x_n})` for `n < n_max`, with `ℓ·x_n mod 1` reduced exactly.
fn for_each_phase(ell: i64, n_max: u64, base: Base, mut f: impl FnMut(u64, Complex64)) {
    let m = base.digits_to_cover(n_max);
    let d = base.checked_pow(m).expect("N below the prefix cap") as u128;
    let l = ell.rem_euclid(d as i64) as u128;
    let mut counter = RadicalCounter::new(0, base, m);
    for n in 0..n_max {
        f(n, unit_phase(l * counter.numerator() as u128 % d, d));
        if n + 1 < n_max {
            counter.step();
        }
    }
}

fn exp_sum_result(ell: i64, n: u64, base: Base, value: Complex64) -> ExpSumResult {
    let s_min = base.valuation(ell) + 1;
    ExpSumResult {
        ell,
        n,
        base,
        value,
        s_min,
        bound: (base.get() as f64).powi(s_min as i32),
    }
}

/// `Σ_{n<N} e^{2πiℓ x_n}`.
pub fn exp_sum(ell: i64, n: u64, base: Base) -> Result<ExpSumResult> {
    check_sum_args(ell, n)?;
    let mut acc = ComplexNeumaier::new();
    for_each_phase(ell, n, base, |_, z| acc.add(z));
    Ok(exp_sum_result(ell, n, base, acc.value()))
}

/// `exp_sum(ℓ, N, b)` for every `N = 1..=n_max`, in one pass.
pub fn exp_sum_prefixes(ell: i64, n_max: u64, base: Base) -> Result<Vec<ExpSumResult>> {
    check_sum_args(ell, n_max)?;
    let mut acc = ComplexNeumaier::new();
    let mut out = Vec::with_capacity(n_max as usize);
    for_each_phase(ell, n_max, base, |n, z| {
        acc.add(z);
        out.push(exp_sum_result(ell, n + 1, base, acc.value()));
    });
    Ok(out)
}

/// `∫_0^1 Δ_N(x) e^{−2πiℓx} dx`, integrating each linear piece in closed form.
///
/// On a piece `Δ = c − N x`, an antiderivative of `(c − Nx)·e^{−iωx}` is
/// `e^{−iωx}·(i(c − Nx)/ω − N/ω²)` with `ω = 2πℓ`.
pub fn fourier_coeff_delta(profile: &DiscrepancyProfile, ell: i64) -> Result<Complex64> {
    if ell == 0 {
        return Err(Error::domain("ell must be nonzero"));
    }
    let d = profile.denom() as u128;
    let df = profile.denom() as f64;
    let omega = TAU * ell as f64;
    let tail = profile.n() as f64 / (omega * omega);
    let l = ell.rem_euclid(d as i64) as u128;
    // e^{−2πiℓ·num/D}
    let phase = |num: u64| unit_phase(l * num as u128 % d, d).conj();
    let anti = |num: u64, v: i128| phase(num) * Complex64::new(-tail, v as f64 / df / omega);
    let mut acc = ComplexNeumaier::new();
    for seg in profile.segments().filter(|s| s.width_num() > 0) {
        acc.add(anti(seg.right_num, seg.right));
        acc.add(-anti(seg.left_num, seg.left));
    }
    Ok(acc.value())
}

/// `(1/(2πiℓ))·Σ_{n<N} e^{−2πiℓ x_n}`, the other side of the Fourier identity.
pub fn fourier_coeff_via_exp_sum(profile: &DiscrepancyProfile, ell: i64) -> Result<Complex64> {
    let sum = exp_sum(-ell, profile.n(), profile.base())?.value;
    Ok(sum / Complex64::new(0.0, TAU * ell as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigKind {
    Sin,
    Cos,
}

/// Integrands with closed forms for `∫f`, `f(0)`, `f(1)`, `‖f''‖_1` and `V(f)`.
///
/// Grammar: `poly:c0,c1,...`, `trig:sin|cos,k,amp` (for `amp·sin(2πkx)`),
/// `exp:a` (for `e^{ax}`).
#[derive(Clone, Debug, PartialEq)]
pub enum Integrand {
    Poly(Vec<ExactRational>),
    Trig { kind: TrigKind, k: u32, amp: f64 },
    Exp(f64),
}

fn parse_rational(s: &str) -> Result<ExactRational> {
    let bad = || Error::Parse(format!("bad coefficient '{s}'"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(ExactRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let int_part: BigInt = match int.trim_start_matches(['-', '+']) {
            "" => BigInt::zero(),
            t => t.parse().map_err(|_| bad())?,
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = ExactRational::new(int_part * &scale + frac_part, scale);
        return Ok(if neg { -mag } else { mag });
    }
    s.parse::<BigInt>().map(ExactRational::from_integer).map_err(|_| bad())
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("{what} must be finite")));
    }
    Ok(v)
}

impl FromStr for Integrand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("unknown integrand '{s}'")))?;
        match kind {
            "poly" => {
                let coeffs = args.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?;
                Ok(Integrand::Poly(coeffs))
            }
            "trig" => {
                let parts: Vec<&str> = args.split(',').collect();
                let [kind, k, amp] = parts[..] else {
                    return Err(Error::Parse("trig takes sin|cos,k,amp".into()));
                };
                let kind = match kind.trim() {
                    "sin" => TrigKind::Sin,
                    "cos" => TrigKind::Cos,
                    other => return Err(Error::Parse(format!("unknown trig kind '{other}'"))),
                };
                let k: u32 = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad frequency '{k}'")))?;
                Ok(Integrand::Trig {
                    kind,
                    k,
                    amp: parse_f64(amp, "amplitude")?,
                })
            }
            "exp" => Ok(Integrand::Exp(parse_f64(args, "exponent")?)),
            other => Err(Error::Parse(format!("unknown integrand '{other}'"))),
        }
    }
}

impl fmt::Display for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Integrand::Poly(c) => {
                let parts: Vec<String> = c.iter().map(|q| q.to_string()).collect();
                write!(f, "poly:{}", parts.join(","))
            }
            Integrand::Trig { kind, k, amp } => {
                let kind = match kind {
                    TrigKind::Sin => "sin",
                    TrigKind::Cos => "cos",
                };
                write!(f, "trig:{kind},{k},{amp}")
            }
            Integrand::Exp(a) => write!(f, "exp:{a}"),
        }
    }
}

/// `∫_0^1 |P|` for a real polynomial, splitting at sign changes.
fn abs_integral_poly(coeffs: &[f64]) -> f64 {
    if coeffs.iter().all(|&c| c == 0.0) {
        return 0.0;
    }
    let eval = |x: f64| coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
    let anti = |x: f64| {
        coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, &c)| acc * x + c / (i + 1) as f64)
            * x
    };
    const GRID: usize = 4096;
    let mut cuts = vec![0.0];
    let mut prev = eval(0.0);
    for i in 1..=GRID {
        let x = i as f64 / GRID as f64;
        let v = eval(x);
        if prev != 0.0 && v != 0.0 && (prev < 0.0) != (v < 0.0) {
            let (mut lo, mut hi) = ((i - 1) as f64 / GRID as f64, x);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if (eval(mid) < 0.0) == (prev < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        if v != 0.0 {
            prev = v;
        }
    }
    cuts.push(1.0);
    cuts.windows(2).map(|w| (anti(w[1]) - anti(w[0])).abs()).sum()
}

fn derivative(c: &[ExactRational]) -> Vec<ExactRational> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, q)| q * ExactRational::from_integer(BigInt::from(i)))
        .collect()
}

impl Integrand {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Integrand::Poly(c) => c.iter().rev().fold(0.0, |acc, q| acc * x + to_f64(q)),
            Integrand::Trig { kind, k, amp } => {
                let t = TAU * *k as f64 * x;
                amp * match kind {
                    TrigKind::Sin => t.sin(),
                    TrigKind::Cos => t.cos(),
                }
            }
            Integrand::Exp(a) => (a * x).exp(),
        }
    }

    /// `f(num/den)` with the trigonometric phase reduced exactly.
    fn eval_at(&self, num: u64, den: u64) -> f64 {
        match self {
            Integrand::Trig { kind, k, amp } => {
                let d = den as u128;
                let z = unit_phase(*k as u128 % d * num as u128 % d, d);
                amp * match kind {
                    TrigKind::Sin => z.im,
                    TrigKind::Cos => z.re,
                }
            }
            _ => self.eval(num as f64 / den as f64),
        }
    }

    pub fn integral(&self) -> f64 {
        match self {
            Integrand::Poly(_) => to_f64(&self.integral_exact().expect("polynomial")),
            Integrand::Trig { kind, k, amp } => match (kind, k) {
                (TrigKind::Cos, 0) => *amp,
                _ => 0.0,
            },
            Integrand::Exp(a) if *a == 0.0 => 1.0,
            Integrand::Exp(a) => a.exp_m1() / a,
        }
    }

    pub fn integral_exact(&self) -> Option<ExactRational> {
        match self {
            Integrand::Poly(c) => Some(
                c.iter()
                    .enumerate()
                    .map(|(i, q)| q / ExactRational::from_integer(BigInt::from(i + 1)))
                    .fold(ExactRational::zero(), |a, b| a + b),
            ),
            _ => None,
        }
    }

    /// `f(1) − f(0)`, exact for polynomials.
    pub fn endpoint_jump_exact(&self) -> Option<ExactRational> {
        match self {
            Integrand::Poly(c) => Some(c.iter().skip(1).fold(ExactRational::zero(), |a, b| a + b)),
            _ => None,
        }
    }

    pub fn endpoint_jump(&self) -> f64 {
        match self {
            Integrand::Poly(_) => to_f64(&self.endpoint_jump_exact().expect("polynomial")),
            Integrand::Trig { .. } => 0.0,
            Integrand::Exp(a) => a.exp_m1(),
        }
    }

    /// `‖f''‖_1`
    pub fn second_derivative_l1(&self) -> f64 {
        match self {
            Integrand::Poly(c) => {
                let d2: Vec<f64> = derivative(&derivative(c)).iter().map(to_f64).collect();
                abs_integral_poly(&d2)
            }
            Integrand::Trig { k, amp, .. } => {
                let w = TAU * *k as f64;
                w * w * amp.abs() * 2.0 / PI
            }
            Integrand::Exp(a) => (a * a.exp_m1()).abs(),
        }
    }

    /// Total variation `V(f) = ‖f'‖_1` on `[0, 1]`.
    pub fn total_variation(&self) -> f64 {
        match self {
            Integrand::Poly(c) => {
                let d1: Vec<f64> = derivative(c).iter().map(to_f64).collect();
                abs_integral_poly(&d1)
            }
            Integrand::Trig { k, amp, .. } => 4.0 * *k as f64 * amp.abs(),
            Integrand::Exp(a) => a.exp_m1().abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QmcDecomposition {
    pub n: u64,
    pub base: Base,
    pub f_id: String,
    pub sum_f: f64,
    /// `N·∫f`
    pub mean_term: f64,
    /// `(f(1) − f(0))·S(N)`
    pub jump_term: f64,
    /// `sum_f − mean_term + jump_term`
    pub remainder: f64,
    /// Exact remainder, for polynomial integrands.
    pub remainder_exact: Option<ExactRational>,
    /// `(b/3)·‖f''‖_1`
    pub bound: f64,
    pub satisfied: bool,
}

/// Running `Σ f(x_n)` and `S(N)` over a prefix with a fixed denominator.
struct QmcAccumulator<'a> {
    f: &'a Integrand,
    denom: u64,
    /// `Σ r_n^k` for each power `k` of a polynomial integrand.
    power_sums: Vec<BigInt>,
    float_sum: Neumaier,
    /// `2·D·S(N)`
    s_scaled: i128,
}

impl<'a> QmcAccumulator<'a> {
    fn new(f: &'a Integrand, denom: u64) -> Self {
        let powers = match f {
            Integrand::Poly(c) => c.len(),
            _ => 0,
        };
        QmcAccumulator {
            f,
            denom,
            power_sums: vec![BigInt::zero(); powers],
            float_sum: Neumaier::new(),
            s_scaled: 0,
        }
    }

    fn push(&mut self, r: u64) {
        if self.power_sums.is_empty() {
            self.float_sum.add(self.f.eval_at(r, self.denom));
        } else {
            let rb = BigInt::from(r);
            let mut p = BigInt::one();
            for s in self.power_sums.iter_mut() {
                *s += &p;
                p *= &rb;
            }
        }
        self.s_scaled += self.denom as i128 - 2 * r as i128;
    }

    fn report(&self, n: u64, base: Base, bound: f64) -> QmcDecomposition {
        let d = BigInt::from(self.denom);
        let s_exact = ExactRational::new(self.s_scaled.into(), &d * 2);
        let nq = ExactRational::from_integer(n.into());
        let f_id = self.f.to_string();
        if let Integrand::Poly(c) = self.f {
            let mut sum = ExactRational::zero();
            let mut dk = BigInt::one();
            for (ck, pk) in c.iter().zip(&self.power_sums) {
                sum += ck * ExactRational::new(pk.clone(), dk.clone());
                dk *= &d;
            }
            let mean = &nq * self.f.integral_exact().expect("polynomial");
            let jump = self.f.endpoint_jump_exact().expect("polynomial") * &s_exact;
            let rem = &sum - &mean + &jump;
            let remainder = to_f64(&rem);
            return QmcDecomposition {
                n,
                base,
                f_id,
                sum_f: to_f64(&sum),
                mean_term: to_f64(&mean),
                jump_term: to_f64(&jump),
                remainder,
                satisfied: rem.is_zero() || remainder.abs() <= bound,
                remainder_exact: Some(rem),
                bound,
            };
        }
        let sum_f = self.float_sum.value();
        let mean_term = n as f64 * self.f.integral();
        let jump_term = self.f.endpoint_jump() * to_f64(&s_exact);
        let mut r = Neumaier::new();
        r.add(sum_f);
        r.add(-mean_term);
        r.add(jump_term);
        let remainder = r.value();
        let slack = 1e-9 * (1.0 + sum_f.abs());
        QmcDecomposition {
            n,
            base,
            f_id,
            sum_f,
            mean_term,
            jump_term,
            remainder,
            remainder_exact: None,
            bound,
            satisfied: remainder.abs() <= bound + slack,
        }
    }
}

fn check_qmc_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("N must be >= 1"));
    }
    if n > PREFIX_CAP {
        return Err(Error::cap("quadrature length N", n, PREFIX_CAP));
    }
    Ok(())
}

fn qmc_bound(f: &Integrand, base: Base) -> f64 {
    base.get() as f64 / 3.0 * f.second_derivative_l1()
}

/// Splits `Σ_{n<N} f(x_n)` into `N∫f`, the `S(N)` term and a remainder
/// bounded by `(b/3)‖f''‖_1`.
pub fn qmc_decompose(f: &Integrand, n: u64, base: Base) -> Result<QmcDecomposition> {
    check_qmc_n(n)?;
    let m = base.digits_to_cover(n);
    let denom = base.checked_pow(m).expect("N below the prefix cap");
    let mut acc = QmcAccumulator::new(f, denom);
    let mut counter = RadicalCounter::new(0, base, m);
    for k in 0..n {
        acc.push(counter.numerator());
        if k + 1 < n {
            counter.step();
        }
    }
    Ok(acc.report(n, base, qmc_bound(f, base)))
}

/// [`qmc_decompose`] for every `N = 1..=n_max`, in one pass.
pub fn qmc_decompose_prefixes(f: &Integrand, n_max: u64, base: Base) -> Result<Vec<QmcDecomposition>> {
    check_qmc_n(n_max)?;
    let m = base.digits_to_cover(n_max);
    let denom = base.checked_pow(m).expect("N below the prefix cap");
    let bound = qmc_bound(f, base);
    let mut acc = QmcAccumulator::new(f, denom);
    let mut counter = RadicalCounter::new(0, base, m);
    let mut out = Vec::with_capacity(n_max as usize);
    for k in 0..n_max {
        acc.push(counter.numerator());
        out.push(acc.report(k + 1, base, bound));
        if k + 1 < n_max {
            counter.step();
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KoksmaReport {
    /// `|Σ f(x_n) − N∫f|`
    pub gap: f64,
    /// `((b/4)·log_b N + b)·V(f)`
    pub envelope: f64,
    pub satisfied: bool,
}

/// Koksma's inequality with the discrepancy envelope `(b/4) log_b N + b`.
pub fn koksma_gap(f: &Integrand, n: u64, base: Base) -> Result<KoksmaReport> {
    let dec = qmc_decompose(f, n, base)?;
    let gap = match (&dec.remainder_exact, f) {
        (Some(_), Integrand::Poly(_)) => {
            // sum_f − N∫f = remainder − jump, exact
            let jump = f.endpoint_jump_exact().expect("polynomial")
                * crate::discrepancy::s_of_n_direct(n, base)?;
            to_f64(&(dec.remainder_exact.clone().expect("polynomial") - jump).abs())
        }
        _ => (dec.sum_f - dec.mean_term).abs(),
    };
    let b = base.get() as f64;
    let envelope = (b / 4.0 * base.log(n as f64) + b) * f.total_variation();
    Ok(KoksmaReport {
        gap,
        envelope,
        satisfied: gap <= envelope + 1e-9 * (1.0 + dec.sum_f.abs()),
    })
}
