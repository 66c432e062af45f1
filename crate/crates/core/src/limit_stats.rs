//! Scans over `0 ≤ N < M`: the normalised `S(N)` and `‖Δ_N‖_p` against the
//! standard normal law, and tail frequencies against explicit bounds.
//!
//! A scan is split into contiguous `N`-ranges. Each range starts from the
//! digit formula for `S(lo)` and then steps `S(N+1) = S(N) + 1/2 − x_N`.

use std::fmt;
use std::str::FromStr;
use std::thread;

use serde::Serialize;
use libm::erfc;

use crate::digit_formula::{s_scaled_i128, MomentConstants};
use crate::discrepancy::{build_profile, DiscrepancyProfile};
use crate::error::{Error, Result};
use crate::norms::lp_norm_closed_form;
use crate::numeric::{round_sig15, Neumaier};
use crate::radix_core::{Base, ExactRational, RadicalCounter};

pub const EXACT_SCAN_CAP: u64 = 1 << 26;
pub const FAST_SCAN_CAP: u64 = 1 << 32;
pub const LP_SCAN_CAP: u64 = 1 << 16;

/// Standard normal CDF, `Φ(x) = erfc(−x/√2)/2`.
pub fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    /// Integer accumulator `A_N = 2·b^m·S(N)`.
    Exact,
    /// Compensated floating accumulation of `1/2 − x_n`; error at most `N·2⁻⁵⁰`.
    Fast,
}

impl ScanMode {
    pub fn cap(self) -> u64 {
        match self {
            ScanMode::Exact => EXACT_SCAN_CAP,
            ScanMode::Fast => FAST_SCAN_CAP,
        }
    }
}

impl FromStr for ScanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ScanMode::Exact),
            "fast" => Ok(ScanMode::Fast),
            other => Err(Error::Parse(format!("unknown mode '{other}'"))),
        }
    }
}

impl fmt::Display for ScanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanMode::Exact => "exact",
            ScanMode::Fast => "fast",
        })
    }
}

/// One step of a scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRecord {
    pub n: u64,
    pub s_value: f64,
    /// Exact mode: `S(N) = s_numerator / s_denominator`.
    pub s_numerator: Option<i128>,
    pub s_denominator: u128,
    /// `(S(N) − c(b) log_b N) / √(d(b) log_b N)` for `N ≥ 2`.
    pub normalized: Option<f64>,
    pub lp_value: Option<f64>,
}

impl ScanRecord {
    pub fn s_exact(&self) -> Option<ExactRational> {
        self.s_numerator
            .map(|a| ExactRational::new(a.into(), self.s_denominator.into()))
    }
}

/// Centering and scale for the normalised statistic.
#[derive(Clone, Copy, Debug)]
struct Normalizer {
    c: f64,
    d: f64,
    ln_b: f64,
}

impl Normalizer {
    fn new(base: Base) -> Self {
        let k = MomentConstants::new(base);
        Normalizer {
            c: k.c(),
            d: k.d(),
            ln_b: (base.get() as f64).ln(),
        }
    }

    #[inline]
    fn log_b(&self, n: u64) -> f64 {
        (n as f64).ln() / self.ln_b
    }

    #[inline]
    fn apply(&self, n: u64, value: f64) -> Option<f64> {
        if n < 2 {
            return None;
        }
        let l = self.log_b(n);
        Some((value - self.c * l) / (self.d * l).sqrt())
    }
}

/// Streams [`ScanRecord`]s for `N ∈ [lo, hi)` in increasing order.
#[derive(Clone, Debug)]
pub struct ScanIter {
    n: u64,
    hi: u64,
    mode: ScanMode,
    denom: u64,
    counter: RadicalCounter,
    exact: i128,
    fast: Neumaier,
    norm: Normalizer,
}

impl ScanIter {
    fn range(lo: u64, hi: u64, base: Base, m: u32, mode: ScanMode) -> Self {
        let denom = base.checked_pow(m).expect("validated by caller");
        let exact = if lo == 0 {
            0
        } else {
            s_scaled_i128(lo, base, m).expect("2·b^m·S(N) fits i128 below the scan caps")
        };
        ScanIter {
            n: lo,
            hi,
            mode,
            denom,
            counter: RadicalCounter::new(lo.min(denom - 1), base, m),
            exact,
            fast: Neumaier::with_value(exact as f64 / (2.0 * denom as f64)),
            norm: Normalizer::new(base),
        }
    }
}

impl Iterator for ScanIter {
    type Item = ScanRecord;

    fn next(&mut self) -> Option<ScanRecord> {
        if self.n >= self.hi {
            return None;
        }
        let n = self.n;
        let two_d = 2 * self.denom as u128;
        let (s_value, s_numerator) = match self.mode {
            ScanMode::Exact => (self.exact as f64 / two_d as f64, Some(self.exact)),
            ScanMode::Fast => (self.fast.value(), None),
        };
        let r = self.counter.numerator();
        match self.mode {
            ScanMode::Exact => self.exact += self.denom as i128 - 2 * r as i128,
            ScanMode::Fast => self.fast.add(0.5 - r as f64 / self.denom as f64),
        }
        self.n += 1;
        if self.n < self.hi {
            self.counter.step();
        }
        Some(ScanRecord {
            n,
            s_value,
            s_numerator,
            s_denominator: two_d,
            normalized: self.norm.apply(n, s_value),
            lp_value: None,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let k = (self.hi - self.n) as usize;
        (k, Some(k))
    }
}

fn scan_params(m_bound: u64, base: Base, mode: ScanMode) -> Result<u32> {
    if m_bound <= base.get() {
        return Err(Error::domain("M must exceed the base"));
    }
    if m_bound > mode.cap() {
        return Err(Error::cap("scan length M", m_bound, mode.cap()));
    }
    Ok(base.digits_to_cover(m_bound))
}

/// `S(N)` for `0 ≤ N < M`, streamed in order.
pub fn scan_s(m_bound: u64, base: Base, mode: ScanMode) -> Result<ScanIter> {
    let m = scan_params(m_bound, base, mode)?;
    Ok(ScanIter::range(0, m_bound, base, m, mode))
}

/// `S(N)` for `lo ≤ N < hi` within a scan of `[0, M)`.
pub fn scan_s_range(m_bound: u64, base: Base, mode: ScanMode, lo: u64, hi: u64) -> Result<ScanIter> {
    let m = scan_params(m_bound, base, mode)?;
    if lo > hi || hi > m_bound {
        return Err(Error::domain("scan range must lie within [0, M)"));
    }
    Ok(ScanIter::range(lo, hi, base, m, mode))
}

/// Worker count, with `0` meaning the available parallelism.
pub fn resolve_threads(threads: usize) -> usize {
    if threads == 0 {
        thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        threads
    }
}

fn split_even(lo: u64, hi: u64, parts: usize) -> Vec<(u64, u64)> {
    let parts = parts.max(1) as u64;
    let len = hi - lo;
    (0..parts)
        .map(|k| (lo + len * k / parts, lo + len * (k + 1) / parts))
        .filter(|(a, b)| a < b)
        .collect()
}

/// Runs `work` on each range in parallel and returns the results in range order.
fn run_chunks<T, W>(ranges: &[(u64, u64)], work: W) -> Vec<T>
where
    T: Send,
    W: Fn(u64, u64) -> T + Sync,
{
    if ranges.len() <= 1 {
        return ranges.iter().map(|&(a, b)| work(a, b)).collect();
    }
    thread::scope(|s| {
        let handles: Vec<_> = ranges
            .iter()
            .map(|&(a, b)| {
                let work = &work;
                s.spawn(move || work(a, b))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scan worker panicked"))
            .collect()
    })
}

/// Folds every [`ScanRecord`] of `[0, M)` over `threads` contiguous ranges,
/// merging partial results left to right.
pub fn scan_fold<T, I, F, G>(
    m_bound: u64,
    base: Base,
    mode: ScanMode,
    threads: usize,
    init: I,
    fold: F,
    merge: G,
) -> Result<T>
where
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, &ScanRecord) + Sync,
    G: Fn(T, T) -> T,
{
    let m = scan_params(m_bound, base, mode)?;
    let ranges = split_even(0, m_bound, resolve_threads(threads));
    let parts = run_chunks(&ranges, |lo, hi| {
        let mut acc = init();
        for rec in ScanIter::range(lo, hi, base, m, mode) {
            fold(&mut acc, &rec);
        }
        acc
    });
    Ok(parts.into_iter().reduce(merge).unwrap_or_else(init))
}

/// Statistic fed to [`clt_scan`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Statistic {
    S,
    Lp(f64),
}

impl FromStr for Statistic {
    type Err = Error;

    /// `s`, or `lp:<p>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "s" {
            return Ok(Statistic::S);
        }
        if let Some(p) = s.strip_prefix("lp:").or_else(|| s.strip_prefix("lp")) {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::Parse(format!("bad p in statistic '{s}'")))?;
            return Ok(Statistic::Lp(p));
        }
        Err(Error::Parse(format!("unknown statistic '{s}'")))
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::S => f.write_str("s"),
            Statistic::Lp(p) => write!(f, "lp:{p}"),
        }
    }
}

/// `-4.0, -3.75, ..., 4.0`.
pub fn default_lambda_grid() -> Vec<f64> {
    (-16..=16).map(|k| k as f64 * 0.25).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CltReport {
    pub m_bound: u64,
    pub base: Base,
    pub statistic: Statistic,
    pub lambda_grid: Vec<f64>,
    /// Fraction of `2 ≤ N < M` with the normalised statistic `< λ`.
    pub empirical: Vec<f64>,
    pub phi: Vec<f64>,
    pub ks_distance: f64,
    /// `(ln log_b M / log_b M)^{1/4}`
    pub theory_envelope: f64,
}

#[derive(Serialize)]
struct CltRow {
    lambda: f64,
    empirical: f64,
    phi: f64,
    abs_diff: f64,
}

impl CltReport {
    /// CSV with header `lambda,empirical,phi,abs_diff`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for ((&lambda, &empirical), &phi) in self.lambda_grid.iter().zip(&self.empirical).zip(&self.phi) {
            w.serialize(CltRow {
                lambda: round_sig15(lambda),
                empirical: round_sig15(empirical),
                phi: round_sig15(phi),
                abs_diff: round_sig15((empirical - phi).abs()),
            })
            .map_err(|e| Error::Parse(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let r = |v: &[f64]| v.iter().map(|&x| round_sig15(x)).collect::<Vec<_>>();
        serde_json::json!({
            "M": self.m_bound,
            "base": self.base.get(),
            "statistic": self.statistic.to_string(),
            "lambda_grid": r(&self.lambda_grid),
            "empirical": r(&self.empirical),
            "phi": r(&self.phi),
            "ks_distance": round_sig15(self.ks_distance),
            "theory_envelope": round_sig15(self.theory_envelope),
        })
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain("lambda grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("lambda grid has a non-finite value"));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("lambda grid must be sorted"));
    }
    Ok(())
}

/// Profiles of `Δ_N` for `N ∈ [lo, hi)`, built once and then advanced.
fn for_each_profile(lo: u64, hi: u64, base: Base, mut f: impl FnMut(&DiscrepancyProfile)) -> Result<()> {
    let mut profile = build_profile(lo.max(1), base)?;
    for n in lo.max(1)..hi {
        if n > profile.n() {
            profile.advance()?;
        }
        f(&profile);
    }
    Ok(())
}

/// Ranges of `[lo, hi)` with roughly equal `Σ N` (work per `N` grows with `N`).
fn split_by_area(lo: u64, hi: u64, parts: usize) -> Vec<(u64, u64)> {
    let parts = parts.max(1);
    let (a, b) = (lo as f64, hi as f64);
    let mut cuts: Vec<u64> = (0..=parts)
        .map(|k| {
            let t = k as f64 / parts as f64;
            ((a * a + t * (b * b - a * a)).sqrt().round() as u64).clamp(lo, hi)
        })
        .collect();
    cuts[0] = lo;
    cuts[parts] = hi;
    cuts.windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|(x, y)| x < y)
        .collect()
}

/// `‖Δ_N‖_p` for `N ∈ [2, M)`, in order.
fn lp_values(m_bound: u64, base: Base, p: f64, threads: usize) -> Result<Vec<(u64, f64)>> {
    let ranges = split_by_area(2, m_bound, resolve_threads(threads));
    let parts = run_chunks(&ranges, |lo, hi| -> Result<Vec<(u64, f64)>> {
        let mut out = Vec::with_capacity((hi - lo) as usize);
        let mut err = None;
        for_each_profile(lo, hi, base, |prof| {
            match lp_norm_closed_form(prof, p) {
                Ok(v) => out.push((prof.n(), v.value)),
                Err(e) => err = Some(e),
            }
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    });
    let mut all = Vec::with_capacity(m_bound as usize);
    for part in parts {
        all.extend(part?);
    }
    Ok(all)
}

/// Empirical distribution of the normalised statistic over `2 ≤ N < M`
/// on `lambda_grid`, against `Φ`.
pub fn clt_scan(
    m_bound: u64,
    base: Base,
    lambda_grid: &[f64],
    statistic: Statistic,
    mode: ScanMode,
    threads: usize,
) -> Result<CltReport> {
    let b = base.get();
    if m_bound <= b.saturating_mul(b) {
        return Err(Error::domain("M must exceed b^2"));
    }
    check_grid(lambda_grid)?;
    let bins = lambda_grid.len() + 1;
    let bin_of = |v: f64| lambda_grid.partition_point(|&l| l <= v);
    let hist = match statistic {
        Statistic::S => scan_fold(
            m_bound,
            base,
            mode,
            threads,
            || vec![0u64; bins],
            |h, rec| {
                if let Some(z) = rec.normalized {
                    h[bin_of(z)] += 1;
                }
            },
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )?,
        Statistic::Lp(p) => {
            if m_bound > LP_SCAN_CAP {
                return Err(Error::cap("lp scan length M", m_bound, LP_SCAN_CAP));
            }
            let norm = Normalizer::new(base);
            let mut h = vec![0u64; bins];
            for (n, v) in lp_values(m_bound, base, p, threads)? {
                let z = norm.apply(n, v).expect("N >= 2");
                h[bin_of(z)] += 1;
            }
            h
        }
    };
    let total = (m_bound - 2) as f64;
    let mut cum = 0u64;
    let mut empirical = Vec::with_capacity(lambda_grid.len());
    for &c in &hist[..lambda_grid.len()] {
        cum += c;
        empirical.push(cum as f64 / total);
    }
    let phis: Vec<f64> = lambda_grid.iter().map(|&l| phi(l)).collect();
    let ks_distance = empirical
        .iter()
        .zip(&phis)
        .map(|(e, p)| (e - p).abs())
        .fold(0.0, f64::max);
    let lm = base.log(m_bound as f64);
    Ok(CltReport {
        m_bound,
        base,
        statistic,
        lambda_grid: lambda_grid.to_vec(),
        empirical,
        phi: phis,
        ks_distance,
        theory_envelope: (lm.ln() / lm).powf(0.25),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    #[serde(rename = "M")]
    pub m_bound: u64,
    pub base: u64,
    pub lambda: f64,
    pub threshold: f64,
    pub empirical_fraction: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// Largest deviation from the centre over the scan.
    #[serde(skip)]
    pub max_deviation: f64,
    #[serde(skip)]
    pub violations: u64,
}

impl TailReport {
    /// JSON object with keys `M, base, lambda, threshold, empirical_fraction, bound, satisfied`.
    pub fn to_json(&self) -> serde_json::Value {
        let rounded = TailReport {
            lambda: round_sig15(self.lambda),
            threshold: round_sig15(self.threshold),
            empirical_fraction: round_sig15(self.empirical_fraction),
            bound: round_sig15(self.bound),
            ..self.clone()
        };
        serde_json::to_value(rounded).expect("report serialises")
    }
}

/// `25·λ·b·√(log_b M + 1)`
pub fn tail_threshold(m_bound: u64, base: Base, lambda: f64) -> f64 {
    25.0 * lambda * base.get() as f64 * (base.log(m_bound as f64) + 1.0).sqrt()
}

/// `4√λ/(e^{√λ−1} − 2) + b^{−(√(log_b M) − 2)}`
pub fn tail_bound(m_bound: u64, base: Base, lambda: f64) -> f64 {
    let r = lambda.sqrt();
    4.0 * r / ((r - 1.0).exp() - 2.0) + (base.get() as f64).powf(-(base.log(m_bound as f64).sqrt() - 2.0))
}

/// Fraction of `0 ≤ N < M` with `|S(N) − c(b) log_b M| ≥ 25λb√(log_b M + 1)`.
pub fn tail_scan(m_bound: u64, base: Base, lambda: f64, mode: ScanMode, threads: usize) -> Result<TailReport> {
    if !(lambda >= 3.0) || !lambda.is_finite() {
        return Err(Error::domain("lambda must be >= 3"));
    }
    let center = MomentConstants::new(base).c() * base.log(m_bound as f64);
    let threshold = tail_threshold(m_bound, base, lambda);
    let (violations, max_deviation) = scan_fold(
        m_bound,
        base,
        mode,
        threads,
        || (0u64, 0.0f64),
        |acc, rec| {
            let dev = (rec.s_value - center).abs();
            if dev >= threshold {
                acc.0 += 1;
            }
            acc.1 = acc.1.max(dev);
        },
        |a, b| (a.0 + b.0, a.1.max(b.1)),
    )?;
    let empirical_fraction = violations as f64 / m_bound as f64;
    let bound = tail_bound(m_bound, base, lambda);
    Ok(TailReport {
        m_bound,
        base: base.get(),
        lambda,
        threshold,
        empirical_fraction,
        bound,
        satisfied: empirical_fraction <= bound,
        max_deviation,
        violations,
    })
}

/// Fraction of `2 ≤ N < M` with `|‖Δ_N‖_p − c(b) log_b N| ≥ A·λ·b·√(log_b N)`,
/// against `e^{−√λ}`. The reported threshold is the one at `N = M − 1`.
pub fn lp_tail_scan(
    m_bound: u64,
    base: Base,
    p: f64,
    lambda: f64,
    a: f64,
    threads: usize,
) -> Result<TailReport> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(Error::domain("lambda must be >= 1"));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("A must be a positive real"));
    }
    if m_bound <= base.get() {
        return Err(Error::domain("M must exceed the base"));
    }
    if m_bound > LP_SCAN_CAP {
        return Err(Error::cap("lp scan length M", m_bound, LP_SCAN_CAP));
    }
    let norm = Normalizer::new(base);
    let scale = a * lambda * base.get() as f64;
    let mut violations = 0u64;
    let mut max_deviation = 0.0f64;
    for (n, v) in lp_values(m_bound, base, p, threads)? {
        let l = norm.log_b(n);
        let dev = (v - norm.c * l).abs();
        if dev >= scale * l.sqrt() {
            violations += 1;
        }
        max_deviation = max_deviation.max(dev);
    }
    let empirical_fraction = violations as f64 / (m_bound - 2) as f64;
    let bound = (-lambda.sqrt()).exp();
    Ok(TailReport {
        m_bound,
        base: base.get(),
        lambda,
        threshold: scale * norm.log_b(m_bound - 1).sqrt(),
        empirical_fraction,
        bound,
        satisfied: empirical_fraction <= bound,
        max_deviation,
        violations,
    })
}
