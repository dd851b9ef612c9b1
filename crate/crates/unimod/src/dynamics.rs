//! Geodesic-flow trajectories and certified shrinking-target hit detection.
//!
//! The function `delta` is 1-Lipschitz along the diagonal flow, which turns
//! grid evaluations into rigorous interval certificates: if
//! `delta(a_s L) - r > 0` then no time in `[s, s + delta(a_s L) - r)` can
//! enter the target `K_r`.  All scans below walk adaptively on certified
//! jumps, bisecting near-threshold gaps down to a fine floor; a gap that
//! cannot be resolved is reported as indeterminate rather than silently
//! dropped.

use crate::dani::{validate_rate, RateFunction, ValidationOutcome, COND_S_PLUS_R};
use crate::error::{Error, Result};
use crate::haar::HaarSampler;
use crate::lattice::LatticeBasis;
use crate::moments::block_ranges;
use crate::regions::ConvexRegion;
use rayon::prelude::*;
use serde::Serialize;

/// Largest single flow increment; steps are split so each application stays
/// well-conditioned before re-reduction.
pub const MAX_FLOW_STEP: f64 = 0.5;

/// `log(1.01)`, the threshold below which the covering and separation
/// predicates are guaranteed.
pub fn near_unit_r_bound() -> f64 {
    1.01f64.ln()
}

/// `log(1.9)`, the upper end of the guaranteed separation window.
pub fn separation_s_bound() -> f64 {
    1.9f64.ln()
}

/// Forward walker along the flow orbit of a fixed lattice, kept reduced.
#[derive(Clone)]
struct FlowWalker {
    basis: LatticeBasis,
    s: f64,
}

impl FlowWalker {
    fn new(basis: &LatticeBasis) -> FlowWalker {
        FlowWalker {
            basis: basis.gauss_reduce(),
            s: 0.0,
        }
    }

    fn advance_to(&mut self, target: f64) -> Result<()> {
        loop {
            let rem = target - self.s;
            if rem == 0.0 {
                return Ok(());
            }
            let err_at = |e: Error| {
                Error::OutOfRange(format!("conditioning failure at flow time {target}: {e}"))
            };
            if rem.abs() <= MAX_FLOW_STEP {
                self.basis = self.basis.apply_flow(rem).map_err(err_at)?.gauss_reduce();
                self.s = target;
                return Ok(());
            }
            let ds = MAX_FLOW_STEP.copysign(rem);
            self.basis = self.basis.apply_flow(ds).map_err(err_at)?.gauss_reduce();
            self.s += ds;
        }
    }

    fn delta(&self) -> Result<f64> {
        self.basis.delta()
    }
}

/// One sample of a trajectory; `rate`, `hit` and `margin` are filled when
/// the record is annotated against a rate function.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectorySample {
    pub s: f64,
    pub delta: f64,
    pub rate: Option<f64>,
    pub hit: bool,
    pub margin: Option<f64>,
}

/// Sampled values of `delta` along a flow orbit.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<TrajectorySample>,
    /// Per-gap certificate: `true` when the Lipschitz bound rules out any
    /// target hit strictly between adjacent samples (only meaningful after
    /// annotation).
    pub gap_certified: Vec<bool>,
}

/// `delta(a_s L)` on a strictly increasing grid with steps at most
/// [`MAX_FLOW_STEP`]; the basis is re-reduced between steps so conditioning
/// stays bounded.
pub fn delta_trajectory(basis: &LatticeBasis, grid: &[f64]) -> Result<TrajectoryRecord> {
    if grid.is_empty() {
        return Err(Error::Precondition("trajectory grid must be nonempty".into()));
    }
    for (i, w) in grid.windows(2).enumerate() {
        let step = w[1] - w[0];
        if !(step > 0.0) {
            return Err(Error::Precondition(format!(
                "trajectory grid must be strictly increasing at index {i}"
            )));
        }
        if step > MAX_FLOW_STEP + 1e-12 {
            return Err(Error::Precondition(format!(
                "trajectory grid step {step} at index {i} exceeds {MAX_FLOW_STEP}"
            )));
        }
    }
    let mut walker = FlowWalker::new(basis);
    let mut samples = Vec::with_capacity(grid.len());
    for &s in grid {
        walker.advance_to(s)?;
        samples.push(TrajectorySample {
            s,
            delta: walker.delta()?,
            rate: None,
            hit: false,
            margin: None,
        });
    }
    let gaps = samples.len().saturating_sub(1);
    Ok(TrajectoryRecord {
        samples,
        gap_certified: vec![false; gaps],
    })
}

impl TrajectoryRecord {
    /// Marks hits (`delta <= r(s)`) and certifies gaps against a
    /// non-increasing rate via the two-sided Lipschitz bound.
    pub fn annotate(&mut self, rate: &RateFunction) {
        for sample in &mut self.samples {
            let r = rate.eval(sample.s);
            sample.rate = Some(r);
            sample.margin = Some(r - sample.delta);
            sample.hit = sample.delta <= r;
        }
        for i in 0..self.gap_certified.len() {
            let a = &self.samples[i];
            let b = &self.samples[i + 1];
            let gap = b.s - a.s;
            let floor = 0.5 * (a.delta + b.delta - gap);
            self.gap_certified[i] = floor > rate.eval(a.s);
        }
    }
}

/// A certified target hit: `delta(a_s L) <= r(s)` with `margin = r - delta`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Hit {
    pub s: f64,
    pub margin: f64,
}

/// Result of a certified scan of one interval.
#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub hits: Vec<Hit>,
    /// Sub-intervals where neither a hit nor a Lipschitz miss certificate
    /// could be established at the fine floor.
    pub uncertified: Vec<(f64, f64)>,
    pub evals: u64,
}

impl ScanReport {
    pub fn first_hit(&self) -> Option<Hit> {
        self.hits.first().copied()
    }
}

enum GapOutcome {
    Clear,
    Hit(Hit),
    Indeterminate,
}

struct Scanner<'a> {
    rate: &'a dyn Fn(f64) -> f64,
    /// Decision granularity: gaps that cannot be cleared in one jump of this
    /// size are bisected.
    step: f64,
    /// Bisection floor; gaps thinner than this stay indeterminate.
    fine_floor: f64,
    evals: u64,
    eval_budget: u64,
}

impl<'a> Scanner<'a> {
    fn delta_at(&mut self, walker: &mut FlowWalker, s: f64) -> Result<f64> {
        walker.advance_to(s)?;
        self.evals += 1;
        walker.delta()
    }

    /// Decides a gap `(a, b)` with known endpoint values by bisection.  The
    /// two-sided Lipschitz bound `delta(t) >= (da + db - (b - a)) / 2` rules
    /// the whole gap out when it exceeds the rate at `a` (rates are
    /// non-increasing).
    fn decide_gap(
        &mut self,
        base: &FlowWalker,
        a: f64,
        da: f64,
        b: f64,
        db: f64,
    ) -> Result<GapOutcome> {
        if 0.5 * (da + db - (b - a)) > (self.rate)(a) {
            return Ok(GapOutcome::Clear);
        }
        if b - a <= self.fine_floor || self.evals >= self.eval_budget {
            return Ok(GapOutcome::Indeterminate);
        }
        let mid = 0.5 * (a + b);
        let mut w = base.clone();
        let dm = self.delta_at(&mut w, mid)?;
        // Left half first so the earliest hit in the gap wins.
        let left = self.decide_gap(base, a, da, mid, dm)?;
        if matches!(left, GapOutcome::Hit(_)) {
            return Ok(left);
        }
        if dm <= (self.rate)(mid) {
            return Ok(GapOutcome::Hit(Hit {
                s: mid,
                margin: (self.rate)(mid) - dm,
            }));
        }
        let right = self.decide_gap(&w, mid, dm, b, db)?;
        if matches!(right, GapOutcome::Hit(_)) {
            return Ok(right);
        }
        match (left, right) {
            (GapOutcome::Clear, GapOutcome::Clear) => Ok(GapOutcome::Clear),
            _ => Ok(GapOutcome::Indeterminate),
        }
    }

    /// Scans `[a, b)`, walking on certified jumps.  With `first_only` the
    /// scan stops at the first certified hit; otherwise it records one hit
    /// per target visit (fast-forwarding until the orbit leaves the
    /// threshold neighborhood).
    fn run(
        &mut self,
        walker: &mut FlowWalker,
        a: f64,
        b: f64,
        first_only: bool,
        report: &mut ScanReport,
    ) -> Result<()> {
        let mut s = a;
        let mut d = self.delta_at(walker, s)?;
        while s < b {
            let r = (self.rate)(s);
            if d <= r {
                report.hits.push(Hit { s, margin: r - d });
                if first_only {
                    return Ok(());
                }
                // Leave the current visit before resuming the scan.
                loop {
                    s = (s + self.step).min(b);
                    if s >= b {
                        return Ok(());
                    }
                    d = self.delta_at(walker, s)?;
                    if d > (self.rate)(s) + self.step {
                        break;
                    }
                }
                continue;
            }
            let jump = d - r;
            if jump >= self.step {
                let next = (s + jump).min(b);
                if next >= b {
                    return Ok(());
                }
                s = next;
                d = self.delta_at(walker, s)?;
            } else {
                // Near-threshold: resolve [s, s + step] by bisection.
                let next = (s + self.step).min(b);
                let snapshot = walker.clone();
                let dn = self.delta_at(walker, next)?;
                match self.decide_gap(&snapshot, s, d, next, dn)? {
                    GapOutcome::Clear => {}
                    GapOutcome::Hit(hit) => {
                        report.hits.push(hit);
                        if first_only {
                            return Ok(());
                        }
                    }
                    GapOutcome::Indeterminate => report.uncertified.push((s, next)),
                }
                walker.advance_to(next)?;
                s = next;
                d = dn;
            }
        }
        Ok(())
    }
}

/// Scanning needs positivity and monotonicity of the rate; the
/// `s + r(s)` condition only matters for the Borel-Cantelli dichotomy.
fn validate_rate_for_scan(rate: &RateFunction) -> Result<()> {
    let mut validation: ValidationOutcome = validate_rate(rate);
    validation.violations.retain(|v| v.condition != COND_S_PLUS_R);
    if validation.violations.is_empty() {
        Ok(())
    } else {
        validation.ok = false;
        Err(Error::Validation {
            subject: "rate function",
            report: validation.summary(),
        })
    }
}

fn scan_orbit(
    basis: &LatticeBasis,
    rate: &RateFunction,
    s_max: f64,
    step: f64,
    first_only: bool,
) -> Result<ScanReport> {
    validate_rate_for_scan(rate)?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Precondition(format!("scan step must be positive, got {step}")));
    }
    let s0 = rate.domain_start();
    if !(s_max > s0) {
        return Err(Error::Precondition(format!(
            "scan horizon {s_max} must exceed the rate domain start {s0}"
        )));
    }
    let mut walker = FlowWalker::new(basis);
    let rate_fn = |s: f64| rate.eval(s);
    let mut scanner = Scanner {
        rate: &rate_fn,
        step,
        fine_floor: step / 4096.0,
        evals: 0,
        eval_budget: 2_000_000,
    };
    let mut report = ScanReport {
        hits: Vec::new(),
        uncertified: Vec::new(),
        evals: 0,
    };
    scanner.run(&mut walker, s0, s_max, first_only, &mut report)?;
    report.evals = scanner.evals;
    Ok(report)
}

/// First certified hit of the moving target `K_{r(s)}` on `[s0, s_max]`.
///
/// The scan walks on certified Lipschitz jumps, so hits between grid points
/// are found by bisection; gaps that remain unresolved at the fine floor
/// are reported, never silently ignored.
pub fn first_hit(
    basis: &LatticeBasis,
    rate: &RateFunction,
    s_max: f64,
    step: f64,
) -> Result<ScanReport> {
    scan_orbit(basis, rate, s_max, step, true)
}

/// As [`first_hit`] but collecting one hit per target visit over the whole
/// horizon (used by the flow-based Dirichlet checker).
pub fn all_hits(
    basis: &LatticeBasis,
    rate: &RateFunction,
    s_max: f64,
    step: f64,
) -> Result<ScanReport> {
    scan_orbit(basis, rate, s_max, step, false)
}

/// Outcome of a thickening membership test on `s in [0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ThickeningOutcome {
    /// Certified: some `s in [0, 1)` has `delta(a_s L) <= r`.
    Hit { s: f64, margin: f64 },
    /// Certified: no such `s` exists.
    CertifiedMiss,
    /// Neither could be certified at the fine floor.
    Indeterminate,
}

/// Whether the orbit segment `{a_s L : 0 <= s < 1}` meets `K_r`, with a
/// Lipschitz certificate for negative answers.
pub fn thickening_membership(basis: &LatticeBasis, r: f64, step: f64) -> Result<ThickeningOutcome> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Precondition(format!("target radius must be positive, got {r}")));
    }
    if !(step > 0.0) || step > r / 4.0 + 1e-15 {
        return Err(Error::Precondition(format!(
            "step {step} must be positive and at most r/4 = {}",
            r / 4.0
        )));
    }
    let mut walker = FlowWalker::new(basis);
    let rate_fn = |_: f64| r;
    let mut scanner = Scanner {
        rate: &rate_fn,
        step,
        fine_floor: step / 4096.0,
        evals: 0,
        eval_budget: 100_000,
    };
    let mut report = ScanReport {
        hits: Vec::new(),
        uncertified: Vec::new(),
        evals: 0,
    };
    scanner.run(&mut walker, 0.0, 1.0, true, &mut report)?;
    if let Some(hit) = report.first_hit() {
        return Ok(ThickeningOutcome::Hit {
            s: hit.s,
            margin: hit.margin,
        });
    }
    if report.uncertified.is_empty() {
        Ok(ThickeningOutcome::CertifiedMiss)
    } else {
        Ok(ThickeningOutcome::Indeterminate)
    }
}

/// Monte Carlo estimate of the measure of the flow thickening of `K_r`.
#[derive(Clone, Debug, Serialize)]
pub struct ThickeningEstimate {
    /// Fraction of samples with certified membership.
    pub estimate: f64,
    pub std_error: f64,
    /// Fraction of samples whose scan stayed indeterminate.
    pub indeterminate_fraction: f64,
    pub samples: u64,
}

pub fn thickening_measure_mc(
    r: f64,
    samples: u64,
    step: f64,
    sampler: &HaarSampler,
) -> Result<ThickeningEstimate> {
    if samples < 10_000 {
        return Err(Error::Precondition(format!(
            "thickening estimate needs at least 10^4 samples, got {samples}"
        )));
    }
    let blocks = block_ranges(samples);
    let partials: Vec<Result<(u64, u64)>> = blocks
        .par_iter()
        .map(|&(idx, lo, len)| {
            let mut rng = sampler.substream(idx + 1);
            let mut hits = 0u64;
            let mut indeterminate = 0u64;
            for i in 0..len {
                let basis = rng.sample_lattice();
                match thickening_membership(&basis, r, step).map_err(|e| Error::McSample {
                    index: lo + i,
                    source: Box::new(e),
                })? {
                    ThickeningOutcome::Hit { .. } => hits += 1,
                    ThickeningOutcome::CertifiedMiss => {}
                    ThickeningOutcome::Indeterminate => indeterminate += 1,
                }
            }
            Ok((hits, indeterminate))
        })
        .collect();
    let mut hits = 0u64;
    let mut indeterminate = 0u64;
    for p in partials {
        let (h, i) = p?;
        hits += h;
        indeterminate += i;
    }
    let n = samples as f64;
    let p = hits as f64 / n;
    Ok(ThickeningEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        indeterminate_fraction: indeterminate as f64 / n,
        samples,
    })
}

/// Whether a `K_r` member has a primitive point in one of the two thin boxes
/// around the unit vectors (guaranteed for `0 < r < log 1.01`).
pub fn primitive_near_unit_covering(basis: &LatticeBasis, r: f64) -> Result<bool> {
    if !(r > 0.0 && r < near_unit_r_bound()) {
        return Err(Error::Precondition(format!(
            "covering predicate needs 0 < r < log 1.01, got {r}"
        )));
    }
    let membership = basis.in_kr(r)?;
    if !membership.inside {
        return Err(Error::Precondition(format!(
            "covering predicate needs a K_r member (margin {})",
            membership.margin
        )));
    }
    let y_box = ConvexRegion::y_unit_box(r)?;
    if !basis.primitive_points_in(&y_box)?.is_empty() {
        return Ok(true);
    }
    let x_box = ConvexRegion::x_unit_box(r)?;
    Ok(!basis.primitive_points_in(&x_box)?.is_empty())
}

/// Whether a `K_r` member flowed by `s` is still in `K_r`; guaranteed false
/// for `0 < r < log 1.01` and `6r <= |s| <= log 1.9`.
pub fn kr_revisit_under_flow(basis: &LatticeBasis, r: f64, s: f64) -> Result<bool> {
    if !(r > 0.0 && r < near_unit_r_bound()) {
        return Err(Error::Precondition(format!(
            "separation predicate needs 0 < r < log 1.01, got {r}"
        )));
    }
    if !(s.abs() >= 6.0 * r && s.abs() <= separation_s_bound()) {
        return Err(Error::Precondition(format!(
            "separation predicate needs 6r <= |s| <= log 1.9, got s = {s}"
        )));
    }
    let membership = basis.in_kr(r)?;
    if !membership.inside {
        return Err(Error::Precondition(format!(
            "separation predicate needs a K_r member (margin {})",
            membership.margin
        )));
    }
    Ok(basis.apply_flow(s)?.in_kr(r)?.inside)
}

/// Deterministic pool of `K_r` members: flowed translates `a_eps L_x` with
/// `eps <= r` (membership by construction, always re-verified) together with
/// Haar samples filtered to `K_r`.
pub fn sample_kr_members(
    r: f64,
    constructed: usize,
    filtered: usize,
    max_draws: u64,
    sampler: &HaarSampler,
) -> Result<Vec<LatticeBasis>> {
    let mut members = Vec::with_capacity(constructed + filtered);
    let mut construct_rng = sampler.substream(u64::MAX / 2);
    for _ in 0..constructed {
        let (x, translate) = construct_rng.sample_translate_lattice()?;
        // A second uniform draw supplies the flow fraction eps in [0, r).
        let (u, _) = construct_rng.sample_translate_lattice()?;
        let member = translate.apply_flow(r * u)?;
        let membership = member.in_kr(r)?;
        debug_assert!(membership.inside, "construction left K_r at x = {x}");
        if membership.inside {
            members.push(member);
        }
    }
    let mut filter_rng = sampler.substream(u64::MAX / 2 + 1);
    let mut draws = 0u64;
    while members.len() < constructed + filtered && draws < max_draws {
        let basis = filter_rng.sample_lattice();
        draws += 1;
        if basis.in_kr(r)?.inside {
            members.push(basis);
        }
    }
    Ok(members)
}

/// Where Borel-Cantelli orbits start.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OrbitStart {
    /// Haar-distributed lattices.
    Haar,
    /// Horocycle translates `L_x` with `x` uniform on `[0, 1)`.
    Translate,
}

/// Hit statistics of one dyadic window `[lo, hi)`.
#[derive(Clone, Debug, Serialize)]
pub struct WindowStats {
    pub lo: f64,
    pub hi: f64,
    pub hits: u64,
    pub indeterminate: u64,
    pub hit_fraction: f64,
}

/// Aggregated hit statistics of a shrinking-target experiment.
#[derive(Clone, Debug, Serialize)]
pub struct HitStatistics {
    pub orbits: u64,
    pub rate: String,
    pub start: OrbitStart,
    pub windows: Vec<WindowStats>,
    /// Per-orbit earliest certified hit time, if any.
    pub first_hits: Vec<Option<f64>>,
}

/// Runs `orbits` independent orbits against the moving target `K_{r(s)}`
/// and reports, for each dyadic window `[s_max/2^{k+1}, s_max/2^k)`, the
/// fraction of orbits with at least one certified hit inside the window.
pub fn bc_experiment(
    rate: &RateFunction,
    orbits: u64,
    s_max: f64,
    step: f64,
    sampler: &HaarSampler,
    start: OrbitStart,
) -> Result<HitStatistics> {
    let validation = validate_rate(rate);
    if !validation.ok {
        return Err(Error::Validation {
            subject: "rate function",
            report: validation.summary(),
        });
    }
    if orbits < 100 {
        return Err(Error::Precondition(format!(
            "experiment needs at least 100 orbits, got {orbits}"
        )));
    }
    let s0 = rate.domain_start();
    if !(s_max > s0) {
        return Err(Error::Precondition(format!(
            "horizon {s_max} must exceed the rate domain start {s0}"
        )));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Precondition(format!("scan step must be positive, got {step}")));
    }
    // Dyadic windows [s_max/2^{k+1}, s_max/2^k), clipped to the domain.
    let mut windows = Vec::new();
    let mut hi = s_max;
    while hi > s0.max(1.0) && windows.len() < 60 {
        let lo = (hi / 2.0).max(s0);
        windows.push((lo, hi));
        hi = lo;
    }
    if hi > s0 {
        windows.push((s0, hi));
    }
    windows.reverse();

    // Per orbit: (hit, indeterminate) flags per window plus the first hit.
    type OrbitOutcome = (Vec<(bool, bool)>, Option<f64>);
    let per_orbit: Vec<Result<OrbitOutcome>> = (0..orbits)
        .into_par_iter()
        .map(|orbit| {
            let mut rng = sampler.substream(orbit + 1);
            let basis = match start {
                OrbitStart::Haar => rng.sample_lattice(),
                OrbitStart::Translate => rng.sample_translate_lattice()?.1,
            };
            let mut walker = FlowWalker::new(&basis);
            let rate_fn = |s: f64| rate.eval(s);
            let mut first_hit_time: Option<f64> = None;
            let mut flags = Vec::with_capacity(windows.len());
            for &(lo, hi) in &windows {
                // Resolve dips down to a fraction of the smallest target
                // radius in the window.
                let fine_floor = (rate.eval(hi) / 64.0).max(1e-9);
                let mut scanner = Scanner {
                    rate: &rate_fn,
                    step,
                    fine_floor,
                    evals: 0,
                    eval_budget: 200_000,
                };
                let mut report = ScanReport {
                    hits: Vec::new(),
                    uncertified: Vec::new(),
                    evals: 0,
                };
                scanner.run(&mut walker, lo, hi, true, &mut report)?;
                let hit = report.first_hit();
                if let Some(h) = hit {
                    if first_hit_time.is_none() {
                        first_hit_time = Some(h.s);
                    }
                }
                flags.push((hit.is_some(), !report.uncertified.is_empty()));
                walker.advance_to(hi)?;
            }
            Ok((flags, first_hit_time))
        })
        .collect();

    let mut window_hits = vec![0u64; windows.len()];
    let mut window_ind = vec![0u64; windows.len()];
    let mut first_hits = Vec::with_capacity(orbits as usize);
    for res in per_orbit {
        let (flags, first) = res?;
        for (i, (hit, ind)) in flags.into_iter().enumerate() {
            if hit {
                window_hits[i] += 1;
            }
            if ind {
                window_ind[i] += 1;
            }
        }
        first_hits.push(first);
    }
    let stats = windows
        .iter()
        .zip(window_hits.iter().zip(window_ind.iter()))
        .map(|(&(lo, hi), (&hits, &ind))| WindowStats {
            lo,
            hi,
            hits,
            indeterminate: ind,
            hit_fraction: hits as f64 / orbits as f64,
        })
        .collect();
    Ok(HitStatistics {
        orbits,
        rate: rate.descriptor(),
        start,
        windows: stats,
        first_hits,
    })
}
