//! Command-line front end. Data goes to standard output (or `--out`),
//! diagnostics to standard error.
//!
//! Exit codes: 0 success, 2 invalid input, 3 a checked bound or identity
//! failed, 4 a resource cap was exceeded.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::digit_formula::{
    brute_moments, check_prop8_moment_bound, s_of_n_digits, standard_family_for_s, verify_s_family_identity,
};
use crate::discrepancy::build_profile;
use crate::error::Error;
use crate::harmonic::{exp_sum, fourier_coeff_delta, fourier_coeff_via_exp_sum, koksma_gap, qmc_decompose, Integrand};
use crate::limit_stats::{
    clt_scan, default_lambda_grid, lp_tail_scan, resolve_threads, scan_s, scan_s_range, tail_scan, ScanMode, Statistic,
};
use crate::norms::{lp_norm, sup_norm_value, LpValue};
use crate::numeric::round_sig15;
use crate::radix_core::{digits_of, radical_inverse, Base, ExactRational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_CAP: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "vdcorput",
    version,
    about = "Exact discrepancy statistics of the base-b van der Corput sequence"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Radix b >= 2.
    #[arg(long, global = true, default_value_t = 2)]
    pub base: u64,
    /// Index or prefix length N.
    #[arg(long, global = true)]
    pub n: Option<u64>,
    /// Scan bound as a power of the base, M = b^e.
    #[arg(long = "m-exp", global = true)]
    pub m_exp: Option<u32>,
    /// Literal scan bound M (digit count m for `moments` and `prop8-check`).
    #[arg(long = "m", global = true)]
    pub m: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses the available parallelism.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Seed for randomised checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Fast,
}

impl From<ModeArg> for ScanMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => ScanMode::Exact,
            ModeArg::Fast => ScanMode::Fast,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Points x_0..x_{N-1} as exact fractions.
    Seq,
    /// S(N) from the digits of N.
    S,
    /// S(N) for every 0 <= N < M.
    Scan,
    /// L^p norm of the discrepancy function of the first N points.
    Lp {
        /// Order p >= 1, or `inf` for the sup norm.
        #[arg(long, default_value = "2")]
        p: String,
    },
    /// Empirical distribution of the normalised statistic against the normal CDF.
    Clt {
        /// `lo:hi:step` or a comma-separated list; default -4:4:0.25.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// `s` or `lp:<p>`.
        #[arg(long, default_value = "s")]
        statistic: String,
    },
    /// Large-deviation frequency of S(N) against its explicit bound.
    Tail {
        #[arg(long)]
        lambda: f64,
    },
    /// Large-deviation frequency of the L^p discrepancy for a chosen constant A.
    LpTail {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        a: f64,
    },
    /// Exponential sum over the first N points and its bound.
    Expsum {
        #[arg(long, allow_hyphen_values = true)]
        ell: i64,
    },
    /// Fourier coefficient of the discrepancy function, two ways.
    Fourier {
        #[arg(long, allow_hyphen_values = true)]
        ell: Option<i64>,
        /// Run this many seeded random (N, ell, b) cases instead.
        #[arg(long)]
        trials: Option<u32>,
    },
    /// Quadrature error decomposition and Koksma gap for an integrand.
    Qmc {
        /// `poly:c0,c1,...`, `trig:sin|cos,k,amp` or `exp:a`.
        #[arg(long, allow_hyphen_values = true)]
        f: String,
    },
    /// Exact central moments of S(N) over N < b^m.
    Moments {
        #[arg(long, default_value_t = 2)]
        order: u32,
    },
    /// Moment bound and identity for the weakly dependent family of S(N).
    #[command(name = "prop8-check")]
    Prop8Check {
        #[arg(long, default_value_t = 1)]
        k: u32,
    },
}

/// Command outcome: the text to emit and whether every checked bound held.
struct Output {
    text: String,
    ok: bool,
}

impl Output {
    fn data(text: String) -> Self {
        Output { text, ok: true }
    }

    fn checked(text: String, ok: bool) -> Self {
        Output { text, ok }
    }
}

type CmdResult = std::result::Result<Output, Error>;

/// `num/den` with the denominator always shown.
pub fn fmt_rational(q: &ExactRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

fn fmt_scaled(num: i128, den: u128) -> String {
    let g = num.unsigned_abs().gcd(&den).max(1);
    format!("{}/{}", num / g as i128, den / g)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidBase(_) | Error::Domain(_) | Error::Parse(_) => EXIT_INVALID,
        Error::ResourceCap { .. } => EXIT_CAP,
        Error::Invariant(_) => EXIT_VIOLATION,
    }
}

fn json_line(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("json values serialise");
    s.push('\n');
    s
}

fn require_n(c: &Common) -> Result<u64, Error> {
    c.n.ok_or_else(|| Error::domain("--n is required"))
}

fn scan_bound(c: &Common, base: Base) -> Result<u64, Error> {
    match (c.m, c.m_exp) {
        (Some(_), Some(_)) => Err(Error::domain("give either --m or --m-exp, not both")),
        (Some(m), None) => Ok(m),
        (None, Some(e)) => base
            .checked_pow(e)
            .ok_or_else(|| Error::cap("M = b^e", u128::from(base.get()).saturating_pow(e), u64::MAX)),
        (None, None) => Err(Error::domain("--m or --m-exp is required")),
    }
}

fn digit_count(c: &Common) -> Result<u32, Error> {
    let m = c.m.ok_or_else(|| Error::domain("--m (digit count) is required"))?;
    u32::try_from(m).map_err(|_| Error::domain("--m is too large"))
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Parse(format!("bad grid '{s}'"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !(hi >= lo) {
            return Err(bad());
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(Error::cap("grid points", count as u64, 100_000u64));
        }
        return Ok((0..count).map(|k| lo + k as f64 * step).collect());
    }
    s.split(',').map(num).collect()
}

fn cmd_seq(c: &Common, base: Base) -> CmdResult {
    let n = require_n(c)?;
    if n == 0 {
        return Err(Error::domain("--n must be >= 1"));
    }
    if n > crate::radix_core::PREFIX_CAP {
        return Err(Error::cap("sequence prefix", n, crate::radix_core::PREFIX_CAP));
    }
    let mut out = String::new();
    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            out.push_str("n,num,den\n");
            for i in 0..n {
                let x = radical_inverse(i, base);
                out.push_str(&format!("{i},{},{}\n", x.numer(), x.denom()));
            }
        }
        Format::Json => {
            let rows: Vec<Value> = (0..n)
                .map(|i| {
                    let x = radical_inverse(i, base);
                    json!({"n": i, "x": round_sig15(crate::numeric::to_f64(&x))})
                })
                .collect();
            out = json_line(&Value::Array(rows));
        }
    }
    Ok(Output::data(out))
}

fn cmd_s(c: &Common, base: Base) -> CmdResult {
    let n = require_n(c)?;
    let s = s_of_n_digits(&digits_of(n, base));
    Ok(Output::data(json_line(&json!({"N": n, "S": fmt_rational(&s)}))))
}

const SCAN_BLOCK: u64 = 1 << 16;

fn cmd_scan(c: &Common, base: Base, w: &mut dyn Write) -> Result<bool, Error> {
    let m_bound = scan_bound(c, base)?;
    let mode: ScanMode = c.mode.into();
    // Validates M against the mode's cap before any output.
    scan_s(m_bound, base, mode)?;
    let format = c.format.unwrap_or(Format::Csv);
    let render = |lo: u64, hi: u64| -> String {
        let mut s = String::new();
        for rec in scan_s_range(m_bound, base, mode, lo, hi).expect("validated") {
            let sv = match rec.s_numerator {
                Some(a) => Value::String(fmt_scaled(a, rec.s_denominator)),
                None => json!(round_sig15(rec.s_value)),
            };
            let z = rec.normalized.map(round_sig15);
            match format {
                Format::Csv => {
                    let sv = match &sv {
                        Value::String(t) => t.clone(),
                        other => other.to_string(),
                    };
                    let z = z.map(|v| v.to_string()).unwrap_or_default();
                    s.push_str(&format!("{},{sv},{z}\n", rec.n));
                }
                Format::Json => {
                    s.push_str(&serde_json::to_string(&json!({"N": rec.n, "S": sv, "normalized": z})).expect("json"));
                    s.push('\n');
                }
            }
        }
        s
    };
    let io_err = |e: io::Error| Error::domain(format!("write failed: {e}"));
    if format == Format::Csv {
        w.write_all(b"N,S,normalized\n").map_err(io_err)?;
    }
    let threads = resolve_threads(c.threads);
    let blocks: Vec<(u64, u64)> = (0..m_bound.div_ceil(SCAN_BLOCK))
        .map(|k| (k * SCAN_BLOCK, ((k + 1) * SCAN_BLOCK).min(m_bound)))
        .collect();
    for batch in blocks.chunks(threads.max(1)) {
        let texts: Vec<String> = std::thread::scope(|sc| {
            let handles: Vec<_> = batch
                .iter()
                .map(|&(lo, hi)| {
                    let render = &render;
                    sc.spawn(move || render(lo, hi))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
        });
        for t in texts {
            w.write_all(t.as_bytes()).map_err(io_err)?;
        }
    }
    Ok(true)
}

fn lp_json(n: u64, base: Base, v: &LpValue) -> Value {
    json!({
        "N": n,
        "base": base.get(),
        "p": v.p.to_string(),
        "value": round_sig15(v.value),
        "exactness": v.exactness,
        "integral": v.integral.as_ref().map(fmt_rational),
    })
}

fn cmd_lp(c: &Common, base: Base, p: &str) -> CmdResult {
    let n = require_n(c)?;
    let profile = build_profile(n, base)?;
    let v = if p == "inf" {
        sup_norm_value(&profile)
    } else {
        let p: f64 = p.parse().map_err(|_| Error::Parse(format!("bad p '{p}'")))?;
        lp_norm(&profile, p)?
    };
    Ok(Output::data(json_line(&lp_json(n, base, &v))))
}

fn cmd_clt(c: &Common, base: Base, grid: Option<&str>, statistic: &str) -> CmdResult {
    let m_bound = scan_bound(c, base)?;
    let grid = match grid {
        Some(g) => parse_grid(g)?,
        None => default_lambda_grid(),
    };
    let statistic: Statistic = statistic.parse()?;
    let report = clt_scan(m_bound, base, &grid, statistic, c.mode.into(), c.threads)?;
    let text = match c.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv()?,
        Format::Json => json_line(&report.to_json()),
    };
    Ok(Output::data(text))
}

fn cmd_tail(c: &Common, base: Base, lambda: f64) -> CmdResult {
    let m_bound = scan_bound(c, base)?;
    let r = tail_scan(m_bound, base, lambda, c.mode.into(), c.threads)?;
    Ok(Output::checked(json_line(&r.to_json()), r.satisfied))
}

fn cmd_lp_tail(c: &Common, base: Base, p: f64, lambda: f64, a: f64) -> CmdResult {
    let m_bound = scan_bound(c, base)?;
    let r = lp_tail_scan(m_bound, base, p, lambda, a, c.threads)?;
    Ok(Output::data(json_line(&r.to_json())))
}

fn cmd_expsum(c: &Common, base: Base, ell: i64) -> CmdResult {
    let n = require_n(c)?;
    let r = exp_sum(ell, n, base)?;
    let v = json!({
        "ell": ell,
        "N": n,
        "base": base.get(),
        "re": round_sig15(r.value.re),
        "im": round_sig15(r.value.im),
        "abs": round_sig15(r.value.norm()),
        "s_min": r.s_min,
        "bound": round_sig15(r.bound),
        "satisfied": r.within_bound(),
    });
    Ok(Output::checked(json_line(&v), r.within_bound()))
}

/// Largest residual accepted between the two Fourier computations.
const FOURIER_TOL: f64 = 1e-10;

fn fourier_row(n: u64, base: Base, ell: i64) -> Result<(Value, bool), Error> {
    let profile = build_profile(n, base)?;
    let lhs = fourier_coeff_delta(&profile, ell)?;
    let rhs = fourier_coeff_via_exp_sum(&profile, ell)?;
    let residual = (lhs - rhs).norm();
    let ok = residual < FOURIER_TOL;
    Ok((
        json!({
            "N": n,
            "base": base.get(),
            "ell": ell,
            "re": round_sig15(lhs.re),
            "im": round_sig15(lhs.im),
            "via_sum_re": round_sig15(rhs.re),
            "via_sum_im": round_sig15(rhs.im),
            "residual": round_sig15(residual),
            "satisfied": ok,
        }),
        ok,
    ))
}

/// The seeded random `(N, ℓ, b)` cases: `N ≤ 1024`, `0 < |ℓ| ≤ 40`, `b ∈ {2, 3, 5}`.
pub fn fourier_random_cases(seed: u64, trials: u32) -> Vec<(u64, i64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let n = rng.random_range(1..=1024u64);
            let mut ell = rng.random_range(1..=40i64);
            if rng.random_bool(0.5) {
                ell = -ell;
            }
            let b = [2u64, 3, 5][rng.random_range(0..3usize)];
            (n, ell, b)
        })
        .collect()
}

fn cmd_fourier(c: &Common, base: Base, ell: Option<i64>, trials: Option<u32>) -> CmdResult {
    match (ell, trials) {
        (_, Some(t)) => {
            let mut rows = Vec::new();
            let mut all_ok = true;
            for (n, ell, b) in fourier_random_cases(c.seed, t) {
                let (row, ok) = fourier_row(n, Base::new(b)?, ell)?;
                all_ok &= ok;
                rows.push(row);
            }
            let text = match c.format.unwrap_or(Format::Json) {
                Format::Json => json_line(&Value::Array(rows)),
                Format::Csv => {
                    let mut s = String::from("N,base,ell,re,im,residual\n");
                    for r in &rows {
                        s.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            r["N"], r["base"], r["ell"], r["re"], r["im"], r["residual"]
                        ));
                    }
                    s
                }
            };
            Ok(Output::checked(text, all_ok))
        }
        (Some(ell), None) => {
            let (row, ok) = fourier_row(require_n(c)?, base, ell)?;
            Ok(Output::checked(json_line(&row), ok))
        }
        (None, None) => Err(Error::domain("--ell or --trials is required")),
    }
}

fn cmd_qmc(c: &Common, base: Base, f: &str) -> CmdResult {
    let n = require_n(c)?;
    let f: Integrand = f.parse()?;
    let d = qmc_decompose(&f, n, base)?;
    let k = koksma_gap(&f, n, base)?;
    let v = json!({
        "N": n,
        "base": base.get(),
        "f": d.f_id,
        "sum_f": round_sig15(d.sum_f),
        "mean_term": round_sig15(d.mean_term),
        "jump_term": round_sig15(d.jump_term),
        "remainder": round_sig15(d.remainder),
        "remainder_exact": d.remainder_exact.as_ref().map(fmt_rational),
        "bound": round_sig15(d.bound),
        "satisfied": d.satisfied,
        "koksma_gap": round_sig15(k.gap),
        "koksma_envelope": round_sig15(k.envelope),
        "koksma_satisfied": k.satisfied,
    });
    Ok(Output::checked(json_line(&v), d.satisfied && k.satisfied))
}

fn cmd_moments(c: &Common, base: Base, order: u32) -> CmdResult {
    let m = digit_count(c)?;
    let mom = brute_moments(base, m, order)?;
    let v = json!({
        "base": base.get(),
        "m": m,
        "order": order,
        "mean": fmt_rational(&mom.mean),
        "variance": fmt_rational(mom.variance()),
        "central": mom.central.iter().map(fmt_rational).collect::<Vec<_>>(),
    });
    Ok(Output::data(json_line(&v)))
}

fn cmd_prop8(c: &Common, base: Base, k: u32) -> CmdResult {
    let m = digit_count(c)?;
    let fam = standard_family_for_s(base, m as usize)?;
    let identity = verify_s_family_identity(&fam).is_ok();
    let r = check_prop8_moment_bound(&fam, k)?;
    let v = json!({
        "base": base.get(),
        "m": m,
        "k": k,
        "a": fam.arity(),
        "c": round_sig15(fam.decay()),
        "moment": fmt_rational(&r.moment),
        "bound": round_sig15(r.bound),
        "satisfied": r.satisfied,
        "identity": identity,
    });
    Ok(Output::checked(json_line(&v), r.satisfied && identity))
}

fn open_output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn dispatch(cli: &Cli, w: &mut dyn Write) -> Result<bool, Error> {
    let c = &cli.common;
    let base = Base::new(c.base)?;
    let out = match &cli.command {
        Command::Scan => return cmd_scan(c, base, w),
        Command::Seq => cmd_seq(c, base)?,
        Command::S => cmd_s(c, base)?,
        Command::Lp { p } => cmd_lp(c, base, p)?,
        Command::Clt { grid, statistic } => cmd_clt(c, base, grid.as_deref(), statistic)?,
        Command::Tail { lambda } => cmd_tail(c, base, *lambda)?,
        Command::LpTail { p, lambda, a } => cmd_lp_tail(c, base, *p, *lambda, *a)?,
        Command::Expsum { ell } => cmd_expsum(c, base, *ell)?,
        Command::Fourier { ell, trials } => cmd_fourier(c, base, *ell, *trials)?,
        Command::Qmc { f } => cmd_qmc(c, base, f)?,
        Command::Moments { order } => cmd_moments(c, base, *order)?,
        Command::Prop8Check { k } => cmd_prop8(c, base, *k)?,
    };
    w.write_all(out.text.as_bytes())
        .map_err(|e| Error::domain(format!("write failed: {e}")))?;
    Ok(out.ok)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut w = match open_output(&cli.common.out) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: cannot open output: {e}");
            return EXIT_INVALID;
        }
    };
    let result = dispatch(&cli, &mut w);
    let flushed = w.flush();
    match result {
        Ok(true) => match flushed {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: write failed: {e}");
                EXIT_INVALID
            }
        },
        Ok(false) => {
            eprintln!("error: a checked bound does not hold");
            EXIT_VIOLATION
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> ExactRational {
        ExactRational::new(n.into(), d.into())
    }

    #[test]
    fn rational_format() {
        assert_eq!(fmt_rational(&q(1, 2)), "1/2");
        assert_eq!(fmt_rational(&q(0, 5)), "0/1");
        assert_eq!(fmt_rational(&q(-6, 4)), "-3/2");
        assert_eq!(fmt_scaled(8, 16), "1/2");
        assert_eq!(fmt_scaled(0, 16), "0/1");
        assert_eq!(fmt_scaled(-3, 9), "-1/3");
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("-1:1:0.5").unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0,1.5").unwrap(), vec![0.0, 1.5]);
        assert_eq!(parse_grid("-4:4:0.25").unwrap(), default_lambda_grid());
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InvalidBase(1)), EXIT_INVALID);
        assert_eq!(exit_code(&Error::cap("x", 2u64, 1u64)), EXIT_CAP);
        assert_eq!(exit_code(&Error::Invariant("x".into())), EXIT_VIOLATION);
    }

    #[test]
    fn random_cases_are_seeded() {
        assert_eq!(fourier_random_cases(7, 20), fourier_random_cases(7, 20));
        assert_ne!(fourier_random_cases(7, 20), fourier_random_cases(8, 20));
        for (n, ell, b) in fourier_random_cases(0, 200) {
            assert!((1..=1024).contains(&n));
            assert!(ell != 0 && ell.abs() <= 40);
            assert!([2, 3, 5].contains(&b));
        }
    }
}
