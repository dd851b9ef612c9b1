//! Moments of primitive lattice-point counts and measures of the sets `K_r`.
//!
//! For a bounded convex region `S` and the count `N_S(L)` of primitive
//! vectors of a unimodular lattice `L` inside `S`, three independent routes
//! evaluate the mean and second moment of `N_S` over the Haar measure:
//!
//! * closed forms for origin-centered squares (via the dilogarithm) and
//!   discs (via a totient sum),
//! * the general series `(area + overlap + sum_n phi(n)/n * I_n) / zeta(2)`
//!   with each `I_n` an adaptive two-dimensional quadrature of a line-clip
//!   length, truncated at the finite cutoff `ceil(R^2)`,
//! * seeded Monte Carlo over Haar-distributed lattices.
//!
//! Agreement of the three routes is the correctness argument; the exact
//! values also yield the measure of `K_r` and its small-`r` asymptotics.

mod quadrature;
mod special;

pub use quadrature::QuadratureOutcome;
pub use special::{dilog, totient_upto, ZETA2};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::haar::HaarSampler;
use crate::regions::ConvexRegion;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// `log(2) / 2`, the threshold above which the square-moment corner region
/// is empty.
pub const HALF_LOG_2: f64 = std::f64::consts::LN_2 / 2.0;

/// Samples per deterministic Monte Carlo block; fixed so that results do not
/// depend on the worker count.
const MC_BLOCK: u64 = 4096;

/// Integral of `e^{-r}/x1 + e^{-r}/x2 - 1/(x1 x2)` over the corner region
/// `{0 < x1, x2 < e^{-r}, x1 + x2 > e^r}`.
///
/// Evaluated through `q = 1 - e^{-2r}` (via `exp_m1`) so the logarithmic
/// terms stay finite-precision all the way to the `r = 0` limit, where the
/// value is `2 - zeta(2)`.  Zero for `r >= log(2)/2`, where the region is
/// empty.
pub fn overlap_integral(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("overlap integral needs r >= 0, got {r}")));
    }
    if r >= HALF_LOG_2 {
        return Ok(0.0);
    }
    if r == 0.0 {
        return Ok(2.0 - ZETA2);
    }
    let e2 = (-2.0 * r).exp();
    let q = -(-2.0 * r).exp_m1(); // 1 - e^{-2r}, no cancellation
    let lq = q.ln();
    let a = 2.0 * (1.0 - r) * (2.0 * e2 - 1.0 + r);
    let b = 2.0 * (q - r) * lq;
    let c = -2.0 * r * r;
    // Li2(1 - e^{-2r}) - Li2(e^{-2r}) rewritten by the reflection identity:
    // 2 Li2(q) + log(q) log(1-q) - zeta(2).
    let d = 2.0 * dilog(q)? + lq * (-q).ln_1p() - ZETA2;
    Ok(a + b + c + d)
}

/// Second moment of the primitive count in the open square with vertices
/// `(±e^{-r}, ±e^{-r})`: `8 e^{-2r}/zeta(2) + 8/zeta(2) * overlap_integral(r)`.
pub fn second_moment_square_exact(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("square parameter must be >= 0, got {r}")));
    }
    Ok(8.0 / ZETA2 * ((-2.0 * r).exp() + overlap_integral(r)?))
}

/// Second moment of the primitive count in the open disc of radius `radius`:
/// `12 R^2/pi + 48/pi * sum_{n <= R^2} phi(n) (sqrt(R^4-n^2)/n + asin(n/R^2) - pi/2)`.
pub fn second_moment_disc_exact(radius: f64) -> Result<f64> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Domain(format!("disc radius must be positive, got {radius}")));
    }
    let r2 = radius * radius;
    let r4 = r2 * r2;
    let n_max = r2.floor() as u64;
    let phi = special::totient_upto(n_max);
    let mut sum = 0.0;
    for n in 1..=n_max {
        let nf = n as f64;
        let term = (r4 - nf * nf).max(0.0).sqrt() / nf + (nf / r2).min(1.0).asin()
            - std::f64::consts::FRAC_PI_2;
        sum += phi[n as usize] as f64 * term;
    }
    Ok(12.0 * r2 / std::f64::consts::PI + 48.0 / std::f64::consts::PI * sum)
}

/// Mean of the primitive count in any bounded region: `area / zeta(2)`.
pub fn siegel_mean_exact(region: &ConvexRegion) -> f64 {
    region.area() / ZETA2
}

/// Haar measure of `K_r`:
/// `1 - 2 e^{-2r}/zeta(2) + overlap_integral(r)/zeta(2)`.
pub fn kr_measure_exact(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("K_r threshold must be >= 0, got {r}")));
    }
    let v = 1.0 - 2.0 * (-2.0 * r).exp() / ZETA2 + overlap_integral(r)? / ZETA2;
    // The closed form cancels to zero at r = 0; clamp rounding residue.
    Ok(v.clamp(0.0, 1.0))
}

/// Leading small-`r` asymptotics of the `K_r` measure:
/// `4 r^2 log(1/r) / zeta(2)` on `0 < r < log(2)/2`.
pub fn kr_measure_asymptotic(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < HALF_LOG_2) {
        return Err(Error::Domain(format!(
            "asymptotic form needs 0 < r < log(2)/2, got {r}"
        )));
    }
    Ok(4.0 * r * r * (1.0 / r).ln() / ZETA2)
}

/// Options for the quadrature route.
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub max_cells: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        // The embedded indicator is strongly conservative (observed actual
        // errors sit two orders below it), so this keeps results well inside
        // 1e-4 relative agreement with the closed forms.
        QuadOptions {
            rel_tol: 3e-5,
            max_cells: 1_000_000,
        }
    }
}

/// One term of the second-moment series.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesTerm {
    pub n: u64,
    /// `phi(n)/n`.
    pub weight: f64,
    /// `integral over S of |I_x^n| + |I_x^{-n}|`.
    pub integral: f64,
    pub error: f64,
    pub cells: usize,
}

/// Second moment evaluated by quadrature of the general series.
#[derive(Clone, Debug, Serialize)]
pub struct QuadMoment {
    pub value: f64,
    pub error: f64,
    pub area: f64,
    pub overlap_area: f64,
    pub terms: Vec<SeriesTerm>,
    pub cells: usize,
}

/// Smallest `T` with every clip interval empty for `|n| > T`: since
/// `|v|^2 = n^2/|x|^2 + t^2 |x|^2 >= n^2/R^2` with both `x` and `v` inside
/// the region, `T = ceil(R^2)` suffices.
pub fn series_cutoff(region: &ConvexRegion) -> u64 {
    let outer = region.outer_radius();
    (outer * outer).ceil() as u64
}

/// Second moment of the primitive count in an arbitrary bounded convex
/// region, by the cutoff series with adaptive quadrature of each term.
pub fn second_moment_general(region: &ConvexRegion, opts: QuadOptions) -> Result<QuadMoment> {
    if !(1e-8..=1e-2).contains(&opts.rel_tol) {
        return Err(Error::OutOfRange(format!(
            "quadrature tolerance must lie in [1e-8, 1e-2], got {}",
            opts.rel_tol
        )));
    }
    let (area, overlap_area) = region.area_and_symmetry();
    let cutoff = series_cutoff(region);
    let phi = special::totient_upto(cutoff);
    let symmetric = region.is_centrally_symmetric();
    // Per-term absolute error floor: the area parts bound the moment scale
    // from below, so this keeps the summed error within the requested
    // relative tolerance even when individual terms are tiny.
    let abs_tol = opts.rel_tol * (area + overlap_area) / (2.0 * cutoff as f64);
    let mut terms = Vec::new();
    let mut series = 0.0;
    let mut err = 0.0;
    let mut cells = 0usize;
    for n in 1..=cutoff {
        let outcome = integrate_term(region, n, symmetric, abs_tol, &opts)?;
        let weight = phi[n as usize] as f64 / n as f64;
        series += weight * outcome.value;
        err += weight * outcome.error;
        cells += outcome.cells;
        terms.push(SeriesTerm {
            n,
            weight,
            integral: outcome.value,
            error: outcome.error,
            cells: outcome.cells,
        });
    }
    Ok(QuadMoment {
        value: (area + overlap_area + series) / ZETA2,
        error: err / ZETA2,
        area,
        overlap_area,
        terms,
        cells,
    })
}

/// `integral over S of (|I_x^n| + |I_x^{-n}|) dx` for one `n >= 1`.
///
/// The clip interval for `x` is taken along direction `x` from base
/// `±n w(x)` with `w(x) = (-x2, x1)/|x|^2`; every point of that line has
/// component exactly `±n/|x|` along `rot90(x)/|x|`, so the line meets `S`
/// only if the support function satisfies `h_S(±rot90(x)) >= n`.  That
/// support test certifies zero cells exactly (the composition is convex, so
/// the vertex maximum dominates the cell), and the Euclidean norm identity
/// `|v|^2 = n^2/|x|^2 + t^2 |x|^2` bounds the integrand on cells whose
/// samples all miss a thin support sliver.
fn integrate_term(
    region: &ConvexRegion,
    n: u64,
    symmetric: bool,
    abs_tol: f64,
    opts: &QuadOptions,
) -> Result<QuadratureOutcome> {
    let nf = n as f64;
    let outer = region.outer_radius();
    let signs: &[f64] = if symmetric { &[1.0] } else { &[1.0, -1.0] };
    let factor = if symmetric { 2.0 } else { 1.0 };

    let f = move |x: Vec2| {
        let q = x.norm_sq();
        if q == 0.0 {
            return 0.0;
        }
        let w = Vec2::new(-x.y / q, x.x / q);
        let mut total = 0.0;
        for &s in signs {
            let iv = region
                .line_interval(w * (s * nf), x)
                .unwrap_or(crate::regions::Interval::EMPTY);
            total += iv.length();
        }
        factor * total
    };

    let rot = |p: Vec2| Vec2::new(-p.y, p.x);
    let certified_zero = move |v: &[Vec2; 3]| {
        signs.iter().all(|&s| {
            // Line misses S for every x in the hull: either S never reaches
            // the offset line, or S lies entirely beyond it.
            let below = v.iter().all(|p| region.support_function(rot(*p) * s) <= nf);
            let beyond = || v.iter().all(|p| region.support_function(rot(*p) * (-s)) < -nf);
            below || beyond()
        })
    };

    let bound = move |v: &[Vec2; 3]| {
        let rmax_sq = v.iter().map(|p| p.norm_sq()).fold(0.0, f64::max);
        if rmax_sq == 0.0 {
            return 0.0;
        }
        let cap = (outer * outer - nf * nf / rmax_sq).max(0.0).sqrt();
        let dist = dist_origin_triangle(v).max(1e-12);
        // 2 sqrt(R^2 - n^2/|x|^2) / |x| never exceeds R^2/n globally.
        let per_line = (2.0 * cap / dist).min(outer * outer / nf);
        factor * signs.len() as f64 * per_line
    };

    quadrature::integrate(
        region,
        &quadrature::Integrand {
            f: &f,
            certified_zero: &certified_zero,
            bound: &bound,
        },
        opts.rel_tol,
        abs_tol,
        opts.max_cells,
    )
}

fn dist_origin_triangle(v: &[Vec2; 3]) -> f64 {
    // Inside test via signs of edge crosses.
    let mut pos = 0;
    let mut neg = 0;
    for i in 0..3 {
        let c = (v[(i + 1) % 3] - v[i]).cross(-v[i]);
        if c >= 0.0 {
            pos += 1;
        }
        if c <= 0.0 {
            neg += 1;
        }
    }
    if pos == 3 || neg == 3 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..3 {
        let a = v[i];
        let e = v[(i + 1) % 3] - a;
        let t = ((-a).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
        best = best.min((a + e * t).norm());
    }
    best
}

/// Monte Carlo estimate of a moment of the primitive count.
#[derive(Clone, Debug, Serialize)]
pub struct McMomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    /// Empirical distribution of the primitive count.
    pub counts: BTreeMap<u64, u64>,
}

/// Sample mean and standard error of the `k`-th power (`k` in `{1, 2}`) of
/// the primitive count over `samples` Haar lattices.
pub fn mc_moment(
    region: &ConvexRegion,
    k: u32,
    samples: u64,
    sampler: &HaarSampler,
) -> Result<McMomentEstimate> {
    if !(k == 1 || k == 2) {
        return Err(Error::Domain(format!("moment order must be 1 or 2, got {k}")));
    }
    if samples < 1_000 {
        return Err(Error::Precondition(format!(
            "monte-carlo moment needs at least 1000 samples, got {samples}"
        )));
    }
    struct Block {
        sum: f64,
        sum_sq: f64,
        counts: BTreeMap<u64, u64>,
    }
    let blocks = block_ranges(samples);
    let partials: Vec<Result<Block>> = blocks
        .par_iter()
        .map(|&(idx, lo, len)| {
            let mut rng = sampler.substream(idx + 1);
            let mut b = Block {
                sum: 0.0,
                sum_sq: 0.0,
                counts: BTreeMap::new(),
            };
            for i in 0..len {
                let basis = rng.sample_lattice();
                let count = basis.primitive_count_in(region).map_err(|e| Error::McSample {
                    index: lo + i,
                    source: Box::new(e),
                })?;
                let v = (count as f64).powi(k as i32);
                b.sum += v;
                b.sum_sq += v * v;
                *b.counts.entry(count).or_insert(0) += 1;
            }
            Ok(b)
        })
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut counts = BTreeMap::new();
    for p in partials {
        let p = p?;
        sum += p.sum;
        sum_sq += p.sum_sq;
        for (c, m) in p.counts {
            *counts.entry(c).or_insert(0) += m;
        }
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
    Ok(McMomentEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples,
        counts,
    })
}

/// Monte Carlo fraction of Haar lattices with `delta <= r`.
#[derive(Clone, Debug, Serialize)]
pub struct McFraction {
    pub fraction: f64,
    pub std_error: f64,
    pub samples: u64,
    pub hits: u64,
}

pub fn kr_measure_mc(r: f64, samples: u64, sampler: &HaarSampler) -> Result<McFraction> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("K_r threshold must be >= 0, got {r}")));
    }
    if samples < 1_000 {
        return Err(Error::Precondition(format!(
            "monte-carlo measure needs at least 1000 samples, got {samples}"
        )));
    }
    let blocks = block_ranges(samples);
    let partials: Vec<Result<u64>> = blocks
        .par_iter()
        .map(|&(idx, lo, len)| {
            let mut rng = sampler.substream(idx + 1);
            let mut hits = 0u64;
            for i in 0..len {
                let basis = rng.sample_lattice();
                let m = basis.in_kr(r).map_err(|e| Error::McSample {
                    index: lo + i,
                    source: Box::new(e),
                })?;
                if m.inside {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect();
    let mut hits = 0u64;
    for p in partials {
        hits += p?;
    }
    let n = samples as f64;
    let p = hits as f64 / n;
    Ok(McFraction {
        fraction: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        samples,
        hits,
    })
}

/// `(block index, first sample index, block length)` decomposition of a
/// sample budget into deterministic blocks.
pub(crate) fn block_ranges(samples: u64) -> Vec<(u64, u64, u64)> {
    let mut out = Vec::new();
    let mut lo = 0;
    let mut idx = 0;
    while lo < samples {
        let len = MC_BLOCK.min(samples - lo);
        out.push((idx, lo, len));
        lo += len;
        idx += 1;
    }
    out
}

/// Pairing of the available routes for one region, used by the agreement
/// tests and the CLI.
#[derive(Clone, Debug, Serialize, Default)]
pub struct MomentReport {
    pub exact: Option<f64>,
    pub quadrature: Option<QuadMoment>,
    pub monte_carlo: Option<McMomentEstimate>,
}

impl MomentReport {
    /// Runs the closed form (when the region is a centered square or disc),
    /// the quadrature series, and optionally Monte Carlo on one region.
    pub fn gather(
        region: &ConvexRegion,
        square_r: Option<f64>,
        opts: QuadOptions,
        mc: Option<(u64, &HaarSampler)>,
    ) -> Result<MomentReport> {
        let exact = match (square_r, region.disc_radius()) {
            (Some(r), _) => Some(second_moment_square_exact(r)?),
            (None, Some(radius)) => Some(second_moment_disc_exact(radius)?),
            _ => None,
        };
        let quadrature = Some(second_moment_general(region, opts)?);
        let monte_carlo = match mc {
            Some((samples, sampler)) => Some(mc_moment(region, 2, samples, sampler)?),
            None => None,
        };
        Ok(MomentReport {
            exact,
            quadrature,
            monte_carlo,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn overlap_integral_limits() {
        // r = 0 limit.
        assert_abs_diff_eq!(overlap_integral(0.0).unwrap(), 2.0 - ZETA2, epsilon = 1e-15);
        // Exact zero at and above the vanishing threshold.
        assert_abs_diff_eq!(overlap_integral(HALF_LOG_2).unwrap(), 0.0, epsilon = 1e-10);
        assert_eq!(overlap_integral(0.5).unwrap(), 0.0);
        // Continuity at the seam.
        let eps = 1e-8;
        assert!(overlap_integral(HALF_LOG_2 - eps).unwrap().abs() <= 1e-6);
        // Tiny r agrees with the limit through the guarded route.
        let tiny = overlap_integral(1e-9).unwrap();
        assert_abs_diff_eq!(tiny, 2.0 - ZETA2, epsilon = 1e-7);
        assert!(overlap_integral(-0.1).is_err());
    }

    #[test]
    fn overlap_integral_matches_direct_quadrature() {
        // Independent oracle: the inner x2 integral is elementary, leaving a
        // one-dimensional adaptive Simpson integral over x1.
        fn inner(r: f64, x1: f64) -> f64 {
            let e = (-r).exp();
            let lo = r.exp() - x1;
            let hi = e;
            // integral of e^{-r}/x1 + e^{-r}/x2 - 1/(x1 x2) dx2
            let anti = |x2: f64| e * x2 / x1 + e * x2.ln() - x2.ln() / x1;
            anti(hi) - anti(lo)
        }
        #[allow(clippy::too_many_arguments)]
        fn simpson(r: f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = inner(r, lm);
            let frm = inner(r, rm);
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(r, a, m, fa, flm, fm, tol / 2.0, depth - 1)
                    + simpson(r, m, b, fm, frm, fb, tol / 2.0, depth - 1)
            }
        }
        for &r in &[0.05f64, 0.1, 0.2, 0.3] {
            let a = r.exp() - (-r).exp();
            let b = (-r).exp();
            let fa = inner(r, a);
            let fm = inner(r, 0.5 * (a + b));
            let fb = inner(r, b);
            let oracle = simpson(r, a, b, fa, fm, fb, 1e-13, 40);
            assert_abs_diff_eq!(overlap_integral(r).unwrap(), oracle, epsilon = 1e-8);
        }
    }

    #[test]
    fn square_moment_paper_constant() {
        let v = second_moment_square_exact(0.0).unwrap();
        let expect = 144.0 / (std::f64::consts::PI * std::f64::consts::PI) - 8.0;
        assert_abs_diff_eq!(v, expect, epsilon = 1e-10);
        assert!((v - 6.59).abs() < 0.01);
    }

    #[test]
    fn square_moment_above_threshold() {
        for &r in &[HALF_LOG_2, 0.4, 1.0] {
            assert_abs_diff_eq!(
                second_moment_square_exact(r).unwrap(),
                8.0 * (-2.0 * r).exp() / ZETA2,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn disc_moment_small_radii() {
        // Empty sum below radius one.
        assert_abs_diff_eq!(
            second_moment_disc_exact(0.8).unwrap(),
            12.0 * 0.64 / std::f64::consts::PI,
            epsilon = 1e-12
        );
        // The n = 1 term vanishes at radius one.
        assert_abs_diff_eq!(
            second_moment_disc_exact(1.0).unwrap(),
            12.0 / std::f64::consts::PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn siegel_means() {
        let sq = ConvexRegion::shrinking_square(0.0).unwrap();
        assert_abs_diff_eq!(siegel_mean_exact(&sq), 4.0 / ZETA2, epsilon = 1e-12);
        let d = ConvexRegion::disc(1.0).unwrap();
        assert_abs_diff_eq!(
            siegel_mean_exact(&d),
            6.0 / std::f64::consts::PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn kr_measure_endpoints_and_monotonicity() {
        assert_abs_diff_eq!(kr_measure_exact(0.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kr_measure_exact(30.0).unwrap(), 1.0, epsilon = 1e-12);
        let mut prev = -1.0;
        for i in 0..400 {
            let r = i as f64 * 0.02;
            let v = kr_measure_exact(r).unwrap();
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev - 1e-12, "not monotone at r = {r}");
            prev = v;
        }
    }

    #[test]
    fn kr_asymptotic_ratio_approaches_one() {
        let ratio = |r: f64| kr_measure_exact(r).unwrap() / kr_measure_asymptotic(r).unwrap();
        let r3 = ratio(1e-3);
        let r4 = ratio(1e-4);
        let r5 = ratio(1e-5);
        assert!((r4 - 1.0).abs() < (r3 - 1.0).abs());
        assert!((r5 - 1.0).abs() < (r4 - 1.0).abs());
        assert!((r5 - 1.0).abs() < 0.15, "ratio at 1e-5: {r5}");
        assert!(kr_measure_asymptotic(0.0).is_err());
        assert!(kr_measure_asymptotic(HALF_LOG_2).is_err());
    }

    #[test]
    fn quadrature_matches_square_closed_form() {
        let r = 0.05;
        let region = ConvexRegion::shrinking_square(r).unwrap();
        let quad = second_moment_general(&region, QuadOptions::default()).unwrap();
        let exact = second_moment_square_exact(r).unwrap();
        assert!(
            (quad.value - exact).abs() <= 1e-4 * exact,
            "quad {} vs exact {exact}",
            quad.value
        );
    }

    #[test]
    fn quadrature_square_above_threshold_has_vanishing_terms() {
        let r = 0.4;
        let region = ConvexRegion::shrinking_square(r).unwrap();
        let quad = second_moment_general(&region, QuadOptions::default()).unwrap();
        for term in &quad.terms {
            assert_eq!(term.integral, 0.0, "term n = {}", term.n);
        }
        let exact = 8.0 * (-0.8f64).exp() / ZETA2;
        assert_abs_diff_eq!(quad.value, exact, epsilon = 1e-10);
    }

    #[test]
    fn quadrature_matches_disc_closed_form() {
        let radius = 1.7;
        let region = ConvexRegion::disc(radius).unwrap();
        let quad = second_moment_general(&region, QuadOptions::default()).unwrap();
        let exact = second_moment_disc_exact(radius).unwrap();
        assert!(
            (quad.value - exact).abs() <= 1e-4 * exact,
            "quad {} vs exact {exact}",
            quad.value
        );
    }

    #[test]
    fn quadrature_tolerance_range_enforced() {
        let region = ConvexRegion::disc(1.0).unwrap();
        for tol in [1e-9, 0.5] {
            let opts = QuadOptions {
                rel_tol: tol,
                ..Default::default()
            };
            assert!(second_moment_general(&region, opts).is_err());
        }
    }

    #[test]
    fn series_cutoff_is_sound() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for region in [
            ConvexRegion::shrinking_square(0.1).unwrap(),
            ConvexRegion::disc(1.9).unwrap(),
            ConvexRegion::rect(-0.4, -1.2, 0.9, 0.3).unwrap(),
        ] {
            let outer = region.outer_radius();
            let cutoff = (outer * outer).ceil();
            let mut tested = 0;
            while tested < 10_000 {
                let x = Vec2::new(
                    rng.gen_range(-outer..outer),
                    rng.gen_range(-outer..outer),
                );
                if !region.contains(x) {
                    continue;
                }
                tested += 1;
                for sign in [1.0, -1.0] {
                    let w = Vec2::new(-x.y, x.x) * (sign * (cutoff + 1.0) / x.norm_sq());
                    let iv = region.line_interval(w, x).unwrap();
                    assert!(iv.length() == 0.0, "cutoff unsound at {x:?}");
                }
            }
        }
    }

    #[test]
    fn mc_moment_validates_arguments() {
        let region = ConvexRegion::disc(1.0).unwrap();
        let sampler = HaarSampler::new(5);
        assert!(mc_moment(&region, 3, 10_000, &sampler).is_err());
        assert!(mc_moment(&region, 1, 10, &sampler).is_err());
    }

    #[test]
    fn mc_mean_matches_siegel_at_small_n() {
        let region = ConvexRegion::disc(1.0).unwrap();
        let sampler = HaarSampler::new(11);
        let est = mc_moment(&region, 1, 20_000, &sampler).unwrap();
        let expect = siegel_mean_exact(&region);
        assert!(
            (est.mean - expect).abs() <= 4.0 * est.std_error,
            "mean {} vs {expect} (se {})",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn mc_results_independent_of_block_schedule() {
        // Same seed, same samples -> identical estimate regardless of how
        // rayon schedules the blocks (blocks are indexed, not raced).
        let region = ConvexRegion::shrinking_square(0.1).unwrap();
        let sampler = HaarSampler::new(123);
        let a = mc_moment(&region, 2, 10_000, &sampler).unwrap();
        let b = mc_moment(&region, 2, 10_000, &sampler).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.counts, b.counts);
    }
}
