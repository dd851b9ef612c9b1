//! The correspondence between approximation functions and flow rates, the
//! zero-one-law series, and Dirichlet-improvability checks.
//!
//! An approximation function `psi` (continuous, non-increasing, with
//! `t psi(t)` non-decreasing and below one) corresponds to a unique flow
//! rate `r` through
//!
//! ```text
//! e^s psi(t) = e^{-r(s)} = e^{-s} t,   s = (log t - log psi(t)) / 2,
//! ```
//!
//! equivalently `psi(e^{s - r(s)}) = e^{-s - r(s)}`.  Both directions are
//! solved by bisection on strictly monotone auxiliaries.  The module also
//! evaluates the partial sums of the zero-one-law series, expands continued
//! fractions with exact big-integer convergents, and decides
//! `psi`-Dirichlet behavior up to a horizon along two independent routes
//! (convergent arithmetic and geodesic-flow hits) for cross-validation.

use crate::dynamics;
use crate::error::{Error, Result};
use crate::lattice::LatticeBasis;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

pub const COND_POSITIVE: &str = "positive and finite";
pub const COND_NON_INCREASING: &str = "non-increasing";
pub const COND_T_PSI_NON_DECREASING: &str = "t * psi(t) non-decreasing";
pub const COND_T_PSI_BELOW_ONE: &str = "t * psi(t) < 1";
pub const COND_S_PLUS_R: &str = "s + r(s) non-decreasing";

/// Monotone tabulated function, interpolated piecewise-linearly in
/// log-log coordinates (which preserves monotonicity and positivity) and
/// extended beyond the last node with the end slopes.
#[derive(Clone, Debug, Serialize)]
pub struct MonotoneTable {
    log_x: Vec<f64>,
    log_y: Vec<f64>,
}

impl MonotoneTable {
    pub fn new(points: &[(f64, f64)]) -> Result<MonotoneTable> {
        if points.len() < 2 {
            return Err(Error::Domain("table needs at least two points".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Domain(format!(
                    "table abscissae must be strictly increasing (at x = {})",
                    w[1].0
                )));
            }
        }
        if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
            return Err(Error::Domain("table entries must be positive".into()));
        }
        Ok(MonotoneTable {
            log_x: points.iter().map(|p| p.0.ln()).collect(),
            log_y: points.iter().map(|p| p.1.ln()).collect(),
        })
    }

    pub fn x_start(&self) -> f64 {
        self.log_x[0].exp()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.ln_eval(x.ln()).exp()
    }

    pub fn ln_eval(&self, lx: f64) -> f64 {
        let n = self.log_x.len();
        let i = match self.log_x.binary_search_by(|v| v.total_cmp(&lx)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let t = (lx - self.log_x[i]) / (self.log_x[i + 1] - self.log_x[i]);
        self.log_y[i] + t * (self.log_y[i + 1] - self.log_y[i])
    }
}

/// Approximation function family.
#[derive(Clone, Debug, Serialize)]
pub enum PsiFamily {
    /// `a / t`.
    Power { a: f64 },
    /// `(1 - 1/log t) / t`.
    OneMinusInvLog,
    /// `(1 - 1/t) / t`.
    OneMinusInvT,
    Tabulated(MonotoneTable),
}

#[derive(Clone, Debug, Serialize)]
pub struct PsiFunction {
    family: PsiFamily,
    t0: f64,
}

impl PsiFunction {
    /// `psi(t) = a / t` on `[t0, inf)`; `t0` defaults to 1.
    pub fn power(a: f64, t0: Option<f64>) -> Result<PsiFunction> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("power coefficient must be positive, got {a}")));
        }
        let t0 = t0.unwrap_or(1.0);
        if !(t0 >= 1.0) {
            return Err(Error::Domain(format!("domain start must be >= 1, got {t0}")));
        }
        Ok(PsiFunction {
            family: PsiFamily::Power { a },
            t0,
        })
    }

    /// `psi(t) = (1 - 1/log t) / t`; `t0` defaults to `e^2`.
    pub fn one_minus_inv_log(t0: Option<f64>) -> Result<PsiFunction> {
        let t0 = t0.unwrap_or(std::f64::consts::E * std::f64::consts::E);
        if !(t0 > std::f64::consts::E) {
            return Err(Error::Domain(format!(
                "domain start must exceed e for positivity, got {t0}"
            )));
        }
        Ok(PsiFunction {
            family: PsiFamily::OneMinusInvLog,
            t0,
        })
    }

    /// `psi(t) = (1 - 1/t) / t`; `t0` defaults to 2.
    pub fn one_minus_inv_t(t0: Option<f64>) -> Result<PsiFunction> {
        let t0 = t0.unwrap_or(2.0);
        if !(t0 > 1.0) {
            return Err(Error::Domain(format!(
                "domain start must exceed 1 for positivity, got {t0}"
            )));
        }
        Ok(PsiFunction {
            family: PsiFamily::OneMinusInvT,
            t0,
        })
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<PsiFunction> {
        let table = MonotoneTable::new(&points)?;
        let t0 = table.x_start();
        Ok(PsiFunction {
            family: PsiFamily::Tabulated(table),
            t0,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.family {
            PsiFamily::Power { a } => a / t,
            PsiFamily::OneMinusInvLog => (1.0 - 1.0 / t.ln()) / t,
            PsiFamily::OneMinusInvT => (1.0 - 1.0 / t) / t,
            PsiFamily::Tabulated(table) => table.eval(t),
        }
    }

    /// `log(psi(e^{lt}))` evaluated in the log domain, stable for arguments
    /// far beyond floating-point exponential range.
    fn ln_eval(&self, lt: f64) -> f64 {
        match &self.family {
            PsiFamily::Power { a } => a.ln() - lt,
            PsiFamily::OneMinusInvLog => (-1.0 / lt).ln_1p() - lt,
            PsiFamily::OneMinusInvT => (-(-lt).exp()).ln_1p() - lt,
            PsiFamily::Tabulated(table) => table.ln_eval(lt),
        }
    }

    pub fn descriptor(&self) -> String {
        match &self.family {
            PsiFamily::Power { a } => format!("psi:pow:a={a},t0={}", self.t0),
            PsiFamily::OneMinusInvLog => format!("psi:mod1:t0={}", self.t0),
            PsiFamily::OneMinusInvT => format!("psi:mod2:t0={}", self.t0),
            PsiFamily::Tabulated(t) => format!("psi:tab[{} nodes]", t.log_x.len()),
        }
    }
}

/// Flow-rate function family.
#[derive(Clone, Debug, Serialize)]
pub enum RateFamily {
    Constant { c: f64 },
    /// `c * s^{-alpha}`.
    Power { coeff: f64, alpha: f64 },
    /// `c * s^{-alpha} (log s)^{-beta}`.
    LogPower { coeff: f64, alpha: f64, beta: f64 },
    Tabulated(MonotoneTable),
    /// Rate induced from an approximation function through the
    /// correspondence; evaluated by bisection per call.
    DaniOf(Box<PsiFunction>),
}

#[derive(Clone, Debug, Serialize)]
pub struct RateFunction {
    family: RateFamily,
    s0: f64,
}

impl RateFunction {
    pub fn constant(c: f64, s0: f64) -> Result<RateFunction> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("constant rate must be positive, got {c}")));
        }
        Ok(RateFunction {
            family: RateFamily::Constant { c },
            s0,
        })
    }

    /// `r(s) = coeff * s^{-alpha}`.  The default domain start
    /// `max(1, (coeff * alpha)^{1/(alpha+1)})` is the smallest point from
    /// which `s + r(s)` is non-decreasing.
    pub fn power(coeff: f64, alpha: f64, s0: Option<f64>) -> Result<RateFunction> {
        if !(coeff > 0.0) || !(alpha > 0.0) {
            return Err(Error::Domain(format!(
                "power rate needs positive coefficient and exponent, got {coeff}, {alpha}"
            )));
        }
        let s0 = s0.unwrap_or_else(|| (coeff * alpha).powf(1.0 / (alpha + 1.0)).max(1.0));
        if !(s0 > 0.0) {
            return Err(Error::Domain(format!("domain start must be positive, got {s0}")));
        }
        Ok(RateFunction {
            family: RateFamily::Power { coeff, alpha },
            s0,
        })
    }

    pub fn log_power(coeff: f64, alpha: f64, beta: f64, s0: f64) -> Result<RateFunction> {
        if !(coeff > 0.0) || !(alpha >= 0.0) {
            return Err(Error::Domain(format!(
                "log-power rate needs positive coefficient and alpha >= 0, got {coeff}, {alpha}"
            )));
        }
        if !(s0 > 1.0) {
            return Err(Error::Domain(format!(
                "log-power domain start must exceed 1, got {s0}"
            )));
        }
        Ok(RateFunction {
            family: RateFamily::LogPower { coeff, alpha, beta },
            s0,
        })
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<RateFunction> {
        let table = MonotoneTable::new(&points)?;
        let s0 = table.x_start();
        Ok(RateFunction {
            family: RateFamily::Tabulated(table),
            s0,
        })
    }

    /// The rate induced by `psi` through the correspondence, with domain
    /// start `s0 = (log t0 - log psi(t0)) / 2`.
    pub fn dani_of(psi: PsiFunction) -> RateFunction {
        let s0 = dani_s0(&psi);
        RateFunction {
            family: RateFamily::DaniOf(Box::new(psi)),
            s0,
        }
    }

    pub fn domain_start(&self) -> f64 {
        self.s0
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = s.max(self.s0);
        match &self.family {
            RateFamily::Constant { c } => *c,
            RateFamily::Power { coeff, alpha } => coeff * s.powf(-alpha),
            RateFamily::LogPower { coeff, alpha, beta } => {
                coeff * s.powf(-alpha) * s.ln().powf(-beta)
            }
            RateFamily::Tabulated(table) => table.eval(s),
            RateFamily::DaniOf(psi) => solve_psi_to_r(psi, s),
        }
    }

    pub fn descriptor(&self) -> String {
        match &self.family {
            RateFamily::Constant { c } => format!("rate:const:c={c},s0={}", self.s0),
            RateFamily::Power { coeff, alpha } => {
                format!("rate:pow:alpha={alpha},c={coeff},s0={}", self.s0)
            }
            RateFamily::LogPower { coeff, alpha, beta } => {
                format!("rate:logpow:alpha={alpha},beta={beta},c={coeff},s0={}", self.s0)
            }
            RateFamily::Tabulated(t) => format!("rate:tab[{} nodes]", t.log_x.len()),
            RateFamily::DaniOf(psi) => format!("rate:dani[{}]", psi.descriptor()),
        }
    }
}

/// A named condition violation with its witness point.
#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub condition: String,
    pub witness: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationOutcome {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationOutcome {
    pub fn summary(&self) -> String {
        if self.ok {
            "ok".to_string()
        } else {
            self.violations
                .iter()
                .map(|v| format!("{} violated at {} ({})", v.condition, v.witness, v.detail))
                .collect::<Vec<_>>()
                .join("; ")
        }
    }
}

const VALIDATION_GRID: usize = 10_000;
const MONOTONE_SLACK: f64 = 1e-12;
const MAX_REPORTED_VIOLATIONS: usize = 8;

/// Absolute tolerance absorbing the evaluation noise of bisection-backed
/// rates, which grows with the abscissa.
fn noise_floor(x: f64) -> f64 {
    1e-13 * (1.0 + x.abs())
}

fn push_violation(violations: &mut Vec<Violation>, condition: &str, witness: f64, detail: String) {
    if violations.len() < MAX_REPORTED_VIOLATIONS {
        violations.push(Violation {
            condition: condition.to_string(),
            witness,
            detail,
        });
    }
}

fn validation_grid(lo: f64) -> Vec<f64> {
    let n = VALIDATION_GRID;
    if lo > 0.0 {
        // Log-spaced over six decades.
        let g = 1e6f64.powf(1.0 / (n - 1) as f64);
        let mut points = Vec::with_capacity(n);
        let mut x = lo;
        for _ in 0..n {
            points.push(x);
            x *= g;
        }
        points
    } else {
        (0..n).map(|i| lo + i as f64 * (100.0 / (n - 1) as f64)).collect()
    }
}

/// Grid validation of the approximation-function conditions.
pub fn validate_psi(psi: &PsiFunction) -> ValidationOutcome {
    let grid = validation_grid(psi.t0());
    let mut violations = Vec::new();
    let mut prev: Option<(f64, f64, f64)> = None;
    for &t in &grid {
        let v = psi.eval(t);
        if !(v > 0.0) || !v.is_finite() {
            push_violation(&mut violations, COND_POSITIVE, t, format!("psi({t}) = {v}"));
            break;
        }
        let tv = t * v;
        if tv >= 1.0 {
            push_violation(&mut violations, COND_T_PSI_BELOW_ONE, t, format!("t*psi = {tv}"));
        }
        if let Some((pt, pv, ptv)) = prev {
            if v > pv * (1.0 + MONOTONE_SLACK) + noise_floor(t) {
                push_violation(
                    &mut violations,
                    COND_NON_INCREASING,
                    t,
                    format!("psi({pt}) = {pv} < psi({t}) = {v}"),
                );
            }
            if tv < ptv * (1.0 - MONOTONE_SLACK) - noise_floor(t) {
                push_violation(
                    &mut violations,
                    COND_T_PSI_NON_DECREASING,
                    t,
                    format!("t*psi fell from {ptv} to {tv}"),
                );
            }
        }
        if violations.len() >= MAX_REPORTED_VIOLATIONS {
            break;
        }
        prev = Some((t, v, tv));
    }
    ValidationOutcome {
        ok: violations.is_empty(),
        violations,
    }
}

/// Grid validation of a rate-function closure (positivity, monotonicity,
/// and `s + r(s)` non-decreasing).
pub fn validate_rate_fn(rate: impl Fn(f64) -> f64, s0: f64) -> ValidationOutcome {
    let grid = validation_grid(s0);
    let mut violations = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &s in &grid {
        let v = rate(s);
        // Exact zero is tolerated as underflow of a mathematically positive
        // decaying rate.
        if v < 0.0 || !v.is_finite() {
            push_violation(&mut violations, COND_POSITIVE, s, format!("r({s}) = {v}"));
            break;
        }
        if let Some((ps, pv)) = prev {
            if v > pv * (1.0 + MONOTONE_SLACK) + noise_floor(s) {
                push_violation(
                    &mut violations,
                    COND_NON_INCREASING,
                    s,
                    format!("r({ps}) = {pv} < r({s}) = {v}"),
                );
            }
            let scale = (s.abs() + v.abs()).max(1.0);
            if s + v < ps + pv - MONOTONE_SLACK * scale - noise_floor(s) {
                push_violation(
                    &mut violations,
                    COND_S_PLUS_R,
                    s,
                    format!("s + r(s) fell from {} to {}", ps + pv, s + v),
                );
            }
        }
        if violations.len() >= MAX_REPORTED_VIOLATIONS {
            break;
        }
        prev = Some((s, v));
    }
    ValidationOutcome {
        ok: violations.is_empty(),
        violations,
    }
}

pub fn validate_rate(rate: &RateFunction) -> ValidationOutcome {
    validate_rate_fn(|s| rate.eval(s), rate.domain_start())
}

/// Domain start of the rate induced by `psi`.
pub fn dani_s0(psi: &PsiFunction) -> f64 {
    0.5 * (psi.t0().ln() - psi.eval(psi.t0()).ln())
}

/// Bisection core of the correspondence; assumes `s >= s0` (clamps).
/// Everything runs in the log domain, so horizons far beyond the
/// floating-point exponential range are fine.
fn solve_psi_to_r(psi: &PsiFunction, s: f64) -> f64 {
    let s = s.max(dani_s0(psi));
    let g = |lt: f64| 0.5 * (lt - psi.ln_eval(lt));
    let mut lo = psi.t0().ln();
    // psi non-increasing gives g(t) >= (log t - log psi(t0))/2, so this
    // bracket always covers the root.
    let mut hi = (2.0 * s + psi.eval(psi.t0()).ln()).max(lo) + 1e-9;
    if g(lo) > s {
        // s == s0 up to rounding.
        hi = lo;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lt = 0.5 * (lo + hi);
    s - lt
}

/// Rate value `r(s)` induced by `psi`: solves
/// `(log t - log psi(t)) / 2 = s` for `t` (strictly increasing in `t`) and
/// returns `r = s - log t`.  The defining residual
/// `psi(e^{s-r}) e^{s+r} = 1` is enforced to `1e-10`.
pub fn psi_to_r(psi: &PsiFunction, s: f64) -> Result<f64> {
    let s0 = dani_s0(psi);
    if s < s0 - 1e-9 {
        return Err(Error::Domain(format!(
            "rate undefined below s0 = {s0}, got s = {s}"
        )));
    }
    let s = s.max(s0);
    let r = solve_psi_to_r(psi, s);
    // psi(e^{s-r}) e^{s+r} = 1, checked in the log domain.
    let residual = (psi.ln_eval(s - r) + (s + r)).exp_m1().abs();
    if residual > 1e-10 {
        return Err(Error::Internal(format!(
            "correspondence residual {residual} at s = {s} exceeds 1e-10"
        )));
    }
    Ok(r)
}

/// Approximation value `psi(t)` induced by a rate: solves
/// `s - r(s) = log t` (strictly increasing in `s`) and returns
/// `psi = e^{-s - r(s)}`.
pub fn r_to_psi(rate: &RateFunction, t: f64) -> Result<f64> {
    let s0 = rate.domain_start();
    let t0 = (s0 - rate.eval(s0)).exp();
    if t < t0 * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "approximation function undefined below t0 = {t0}, got t = {t}"
        )));
    }
    let lt = t.ln();
    let h = |s: f64| s - rate.eval(s);
    let mut lo = s0;
    let mut hi = (lt + rate.eval(s0)).max(s0) + 1e-9;
    if h(lo) > lt {
        hi = lo;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if h(mid) < lt {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    Ok((-s - rate.eval(s)).exp())
}

/// Partial sum of `-(1 - n psi(n)) log(1 - n psi(n)) / n` over integers
/// `n` in `[ceil(t0), n_max]`.
pub fn kw_series_partial(psi: &PsiFunction, n_max: u64) -> Result<f64> {
    let n0 = psi.t0().ceil() as u64;
    if n_max < n0 {
        return Err(Error::Domain(format!(
            "series horizon {n_max} is below the domain start {n0}"
        )));
    }
    let mut sum = 0.0;
    for n in n0..=n_max {
        let nf = n as f64;
        let q = 1.0 - nf * psi.eval(nf);
        if q <= 0.0 {
            return Err(Error::Precondition(format!(
                "t*psi(t) reaches 1 at n = {n}; series term undefined"
            )));
        }
        sum += -q * q.ln() / nf;
    }
    Ok(sum)
}

/// Partial sum of `r(n) log(1/r(n))` over integers `n` in
/// `[ceil(s0), n_max]`.
pub fn rate_series_partial(rate: &RateFunction, n_max: u64) -> Result<f64> {
    let n0 = rate.domain_start().max(1.0).ceil() as u64;
    if n_max < n0 {
        return Err(Error::Domain(format!(
            "series horizon {n_max} is below the domain start {n0}"
        )));
    }
    let mut sum = 0.0;
    for n in n0..=n_max {
        let r = rate.eval(n as f64);
        // r log(1/r) -> 0 as r -> 0+; guard against underflowed rates.
        if r > 0.0 {
            sum += r * (1.0 / r).ln();
        }
    }
    Ok(sum)
}

/// Continued fraction of a real in `(0, 1)` with exact integer convergents.
///
/// The input double is treated as the exact dyadic rational it is, so the
/// quotients and convergents below the requested bound are exact integers;
/// `exact` marks expansions that terminated with a zero remainder.
#[derive(Clone, Debug)]
pub struct ContinuedFraction {
    pub x: f64,
    /// Partial quotients `a_1, a_2, ...` (the leading `a_0 = 0` is implicit).
    pub quotients: Vec<BigInt>,
    /// Convergents `(p_k, q_k)` starting from `(0, 1)`.
    pub convergents: Vec<(BigInt, BigInt)>,
    pub exact: bool,
    num: BigInt,
    den: BigInt,
}

fn f64_to_ratio(x: f64) -> (BigInt, BigInt) {
    debug_assert!(x > 0.0 && x < 1.0);
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut exp) = if exp_bits == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let tz = mant.trailing_zeros() as i64;
    mant >>= tz;
    exp += tz;
    (BigInt::from(mant), BigInt::from(1u8) << ((-exp) as usize))
}

fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    let ns = (nb - 80).max(0);
    let ds = (db - 80).max(0);
    let n = (num >> ns).to_f64().unwrap_or(f64::MAX);
    let d = (den >> ds).to_f64().unwrap_or(f64::MAX);
    (n / d) * 2f64.powi((ns - ds) as i32)
}

/// Expands `x` until a convergent denominator exceeds `q_bound` (that
/// convergent is kept so consecutive pairs straddle the bound) or the
/// expansion terminates exactly.
pub fn continued_fraction_expand(x: f64, q_bound: f64) -> Result<ContinuedFraction> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!(
            "continued fraction input must lie in (0, 1), got {x}"
        )));
    }
    if !(q_bound >= 1.0) {
        return Err(Error::Domain(format!("denominator bound must be >= 1, got {q_bound}")));
    }
    let (num, den) = f64_to_ratio(x);
    let bound = BigInt::from(q_bound.floor() as u128);
    let mut quotients = Vec::new();
    let mut convergents: Vec<(BigInt, BigInt)> = vec![(BigInt::ZERO, BigInt::from(1u8))];
    let (mut p2, mut q2) = (BigInt::from(1u8), BigInt::ZERO);
    let (mut p1, mut q1) = (BigInt::ZERO, BigInt::from(1u8));
    let mut r0 = den.clone();
    let mut r1 = num.clone();
    let mut exact = false;
    loop {
        if r1.is_zero() {
            exact = true;
            break;
        }
        let (a, r2) = r0.div_rem(&r1);
        let p = &a * &p1 + &p2;
        let q = &a * &q1 + &q2;
        quotients.push(a);
        convergents.push((p.clone(), q.clone()));
        p2 = std::mem::replace(&mut p1, p);
        q2 = std::mem::replace(&mut q1, q);
        if r2.is_zero() {
            // The convergent just pushed equals x exactly.
            exact = true;
            break;
        }
        r0 = r1;
        r1 = r2;
        if q1 > bound {
            break;
        }
    }
    Ok(ContinuedFraction {
        x,
        quotients,
        convergents,
        exact,
        num,
        den,
    })
}

impl ContinuedFraction {
    /// Exact approximation error `|q_k x - p_k|` of convergent `k`.
    pub fn error_at(&self, k: usize) -> f64 {
        let (p, q) = &self.convergents[k];
        let e = (q * &self.num - p * &self.den).abs();
        ratio_to_f64(&e, &self.den)
    }
}

/// A horizon index where the Dirichlet condition fails.
#[derive(Clone, Debug, Serialize)]
pub struct CfFailure {
    /// Convergent index (into the expansion, `0` being `0/1`).
    pub index: usize,
    pub q_k: f64,
    /// Right end of the failing `t` interval (`min(q_{k+1}, horizon)`).
    pub t_right: f64,
    /// `|q_k x - p_k|`.
    pub error: f64,
    /// `psi(t_right)`.
    pub threshold: f64,
}

/// Verdict of the convergent-based Dirichlet check.
#[derive(Clone, Debug, Serialize)]
pub struct DirichletCfReport {
    pub dirichlet_so_far: bool,
    pub failures: Vec<CfFailure>,
    pub exact_expansion: bool,
    pub checked_pairs: usize,
}

/// Decides the Dirichlet condition `|q x - p| < psi(t), |q| < t` for all
/// `t in [t0, horizon]` through the convergents.
///
/// For `t` in `(q_k, q_{k+1}]` the best error over `|q| < t` is the
/// convergent error `|q_k x - p_k|` (the classical best-approximation
/// property), and `psi` non-increasing puts the binding constraint at the
/// right endpoint; the condition on the interval therefore reduces to
/// `|q_k x - p_k| < psi(min(q_{k+1}, horizon))`.  This interval reduction
/// is cross-validated against the flow criterion by
/// [`dirichlet_check_flow`] rather than trusted alone.
pub fn dirichlet_check_cf(x: f64, psi: &PsiFunction, horizon: f64) -> Result<DirichletCfReport> {
    let validation = validate_psi(psi);
    if !validation.ok {
        return Err(Error::Validation {
            subject: "psi function",
            report: validation.summary(),
        });
    }
    if !(horizon >= psi.t0().max(1.0)) {
        return Err(Error::Domain(format!(
            "horizon {horizon} must reach the domain start and the first convergent"
        )));
    }
    let cf = continued_fraction_expand(x, horizon)?;
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for k in 0..cf.convergents.len().saturating_sub(1) {
        let q_k = ratio_to_f64(&cf.convergents[k].1, &BigInt::from(1u8));
        let q_next = ratio_to_f64(&cf.convergents[k + 1].1, &BigInt::from(1u8));
        let t_right = q_next.min(horizon);
        let t_left = q_k.max(psi.t0());
        if t_right <= t_left {
            continue;
        }
        checked += 1;
        let error = cf.error_at(k);
        let threshold = psi.eval(t_right);
        if error >= threshold {
            failures.push(CfFailure {
                index: k,
                q_k,
                t_right,
                error,
                threshold,
            });
        }
    }
    // An exact expansion ends with error zero, which satisfies every later t.
    Ok(DirichletCfReport {
        dirichlet_so_far: failures.is_empty(),
        failures,
        exact_expansion: cf.exact,
        checked_pairs: checked,
    })
}

/// Verdict of the flow-based Dirichlet check.
#[derive(Clone, Debug, Serialize)]
pub struct DirichletFlowReport {
    /// Certified hits of `K_{r(s)}` — evidence of non-Dirichlet behavior at
    /// the horizon scale.
    pub hits: Vec<dynamics::Hit>,
    pub uncertified: Vec<(f64, f64)>,
    pub s0: f64,
    pub s_max: f64,
    pub evals: u64,
}

impl DirichletFlowReport {
    pub fn non_dirichlet_evidence(&self) -> bool {
        !self.hits.is_empty()
    }
}

/// Scans the orbit of the shear lattice `L_x` against the moving target
/// `K_{r(s)}` with `r` induced by `psi`.
pub fn dirichlet_check_flow(
    x: f64,
    psi: &PsiFunction,
    s_max: f64,
    step: f64,
) -> Result<DirichletFlowReport> {
    let validation = validate_psi(psi);
    if !validation.ok {
        return Err(Error::Validation {
            subject: "psi function",
            report: validation.summary(),
        });
    }
    let rate = RateFunction::dani_of(psi.clone());
    let basis = LatticeBasis::shear(x)?;
    let report = dynamics::all_hits(&basis, &rate, s_max, step)?;
    Ok(DirichletFlowReport {
        hits: report.hits,
        uncertified: report.uncertified,
        s0: rate.domain_start(),
        s_max,
        evals: report.evals,
    })
}

/// Paired verdicts of the two checkers at matched horizons.
#[derive(Clone, Debug, Serialize)]
pub struct DirichletComparison {
    pub cf: DirichletCfReport,
    pub flow: DirichletFlowReport,
    /// Hits with implied `t = e^{s - r(s)}` within the horizon.
    pub flow_hits_in_horizon: usize,
    pub agree: bool,
    /// Disagreement attributable to a near-threshold margin below `step`.
    pub boundary: bool,
}

/// Runs both checkers with the flow horizon `s_max = log(horizon) + r(s0)`
/// matched to the convergent horizon `q <= horizon`; flow hits beyond the
/// implied `t`-horizon are not counted.
pub fn dirichlet_check_both(
    x: f64,
    psi: &PsiFunction,
    horizon: f64,
    step: f64,
) -> Result<DirichletComparison> {
    let cf = dirichlet_check_cf(x, psi, horizon)?;
    let rate = RateFunction::dani_of(psi.clone());
    let s0 = rate.domain_start();
    let s_max = horizon.ln() + rate.eval(s0) + 1e-9;
    let flow = dirichlet_check_flow(x, psi, s_max, step)?;
    let in_horizon = flow
        .hits
        .iter()
        .filter(|h| {
            let r = rate.eval(h.s);
            (h.s - r).exp() <= horizon * (1.0 + 1e-9)
        })
        .count();
    let cf_fails = !cf.dirichlet_so_far;
    let flow_fails = in_horizon > 0;
    let agree = cf_fails == flow_fails;
    let boundary = if agree {
        false
    } else {
        // Margin of the decisive quantities against the threshold.
        let cf_margin = cf
            .failures
            .iter()
            .map(|f| 0.5 * (f.error.ln() - f.threshold.ln()).abs())
            .fold(f64::INFINITY, f64::min);
        let flow_margin = flow
            .hits
            .iter()
            .map(|h| h.margin)
            .fold(f64::INFINITY, f64::min);
        !flow.uncertified.is_empty() || cf_margin < step || flow_margin < step
    };
    Ok(DirichletComparison {
        cf,
        flow,
        flow_hits_in_horizon: in_horizon,
        agree,
        boundary,
    })
}

/// Parses the psi mini-format: `psi:pow:a=<f>[,t0=<f>]`, `psi:mod1[:t0=<f>]`,
/// `psi:mod2[:t0=<f>]`, or `tab:<path>` (two-column CSV, strictly increasing
/// first column).
pub fn parse_psi_spec(spec: &str) -> Result<PsiFunction> {
    let bad = |reason: String| Error::Spec {
        kind: "psi",
        input: spec.to_string(),
        reason,
    };
    if let Some(path) = spec.strip_prefix("tab:") {
        let points = load_table(path)?;
        return PsiFunction::tabulated(points);
    }
    let rest = spec
        .strip_prefix("psi:")
        .ok_or_else(|| bad("expected `psi:<family>` or `tab:<path>`".into()))?;
    let (family, args) = match rest.split_once(':') {
        Some((f, a)) => (f, Some(a)),
        None => (rest, None),
    };
    let kvs = parse_kv_list(args.unwrap_or(""), spec, "psi")?;
    match family {
        "pow" => {
            let a = require_key(&kvs, "a", spec, "psi")?;
            let t0 = optional_key(&kvs, "t0");
            reject_unknown(&kvs, &["a", "t0"], spec, "psi")?;
            PsiFunction::power(a, t0)
        }
        "mod1" => {
            let t0 = optional_key(&kvs, "t0");
            reject_unknown(&kvs, &["t0"], spec, "psi")?;
            PsiFunction::one_minus_inv_log(t0)
        }
        "mod2" => {
            let t0 = optional_key(&kvs, "t0");
            reject_unknown(&kvs, &["t0"], spec, "psi")?;
            PsiFunction::one_minus_inv_t(t0)
        }
        other => Err(bad(format!("unknown psi family `{other}`"))),
    }
}

/// Parses the rate mini-format: `rate:const:c=<f>[,s0=<f>]`,
/// `rate:pow:alpha=<f>[,c=<f>,s0=<f>]`,
/// `rate:logpow:alpha=<f>,beta=<f>,s0=<f>[,c=<f>]`, or `tab:<path>`.
pub fn parse_rate_spec(spec: &str) -> Result<RateFunction> {
    let bad = |reason: String| Error::Spec {
        kind: "rate",
        input: spec.to_string(),
        reason,
    };
    if let Some(path) = spec.strip_prefix("tab:") {
        let points = load_table(path)?;
        return RateFunction::tabulated(points);
    }
    let rest = spec
        .strip_prefix("rate:")
        .ok_or_else(|| bad("expected `rate:<family>` or `tab:<path>`".into()))?;
    let (family, args) = match rest.split_once(':') {
        Some((f, a)) => (f, Some(a)),
        None => (rest, None),
    };
    let kvs = parse_kv_list(args.unwrap_or(""), spec, "rate")?;
    match family {
        "const" => {
            let c = require_key(&kvs, "c", spec, "rate")?;
            let s0 = optional_key(&kvs, "s0").unwrap_or(0.0);
            reject_unknown(&kvs, &["c", "s0"], spec, "rate")?;
            RateFunction::constant(c, s0)
        }
        "pow" => {
            let alpha = require_key(&kvs, "alpha", spec, "rate")?;
            let c = optional_key(&kvs, "c").unwrap_or(1.0);
            let s0 = optional_key(&kvs, "s0");
            reject_unknown(&kvs, &["alpha", "c", "s0"], spec, "rate")?;
            RateFunction::power(c, alpha, s0)
        }
        "logpow" => {
            let alpha = require_key(&kvs, "alpha", spec, "rate")?;
            let beta = require_key(&kvs, "beta", spec, "rate")?;
            let s0 = require_key(&kvs, "s0", spec, "rate")?;
            let c = optional_key(&kvs, "c").unwrap_or(1.0);
            reject_unknown(&kvs, &["alpha", "beta", "c", "s0"], spec, "rate")?;
            RateFunction::log_power(c, alpha, beta, s0)
        }
        other => Err(bad(format!("unknown rate family `{other}`"))),
    }
}

fn parse_kv_list(
    args: &str,
    spec: &str,
    kind: &'static str,
) -> Result<Vec<(String, f64)>> {
    if args.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for part in args.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Spec {
            kind,
            input: spec.to_string(),
            reason: format!("expected `key=value`, found `{part}`"),
        })?;
        let value = v.parse::<f64>().map_err(|_| Error::Spec {
            kind,
            input: spec.to_string(),
            reason: format!("bad float `{v}` for key `{k}`"),
        })?;
        out.push((k.to_string(), value));
    }
    Ok(out)
}

fn require_key(kvs: &[(String, f64)], key: &str, spec: &str, kind: &'static str) -> Result<f64> {
    kvs.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Spec {
            kind,
            input: spec.to_string(),
            reason: format!("missing key `{key}`"),
        })
}

fn optional_key(kvs: &[(String, f64)], key: &str) -> Option<f64> {
    kvs.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
}

fn reject_unknown(
    kvs: &[(String, f64)],
    allowed: &[&str],
    spec: &str,
    kind: &'static str,
) -> Result<()> {
    for (k, _) in kvs {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Spec {
                kind,
                input: spec.to_string(),
                reason: format!("unknown key `{k}`"),
            });
        }
    }
    Ok(())
}

fn load_table(path: &str) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Spec {
                    kind: "table",
                    input: path.to_string(),
                    reason: format!("bad row at line {}", lineno + 1),
                })
        };
        let x = parse(cols.next())?;
        let y = parse(cols.next())?;
        if cols.next().is_some() {
            return Err(Error::Spec {
                kind: "table",
                input: path.to_string(),
                reason: format!("trailing columns at line {}", lineno + 1),
            });
        }
        points.push((x, y));
    }
    Ok(points)
}
