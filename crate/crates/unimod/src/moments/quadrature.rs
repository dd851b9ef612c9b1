//! Adaptive two-dimensional quadrature over convex regions.
//!
//! The region is fan-triangulated (discs get chord triangles whose rim
//! midpoints are snapped back to the circle on subdivision) and refined by
//! bisection of the worst cell.  Each cell carries an embedded error
//! estimate (degree-5 vs degree-2 rule).  Integrands may declare parts of
//! the plane certified-zero and provide a magnitude bound; cells whose
//! sample points all miss the support are then refined against that bound
//! instead of stalling at a spurious zero.

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::regions::ConvexRegion;
use std::collections::BinaryHeap;

/// Degree-5 seven-point rule (barycentric points and weights).
const W_CENTROID: f64 = 0.225;
const A_NEAR_EDGE: f64 = 0.059_715_871_789_77;
const W_NEAR_EDGE: f64 = 0.132_394_152_788_506;
const A_NEAR_VERT: f64 = 0.797_426_985_353_087;
const W_NEAR_VERT: f64 = 0.125_939_180_544_827;

#[derive(Clone, Copy, Debug)]
pub struct QuadratureOutcome {
    pub value: f64,
    pub error: f64,
    pub cells: usize,
}

/// Integrand with support information.
pub struct Integrand<'a> {
    pub f: &'a dyn Fn(Vec2) -> f64,
    /// True when the integrand is certainly zero on the convex hull of the
    /// given triangle (for rim cells of a disc, also on the circular sliver
    /// beyond the chord — satisfied by support-function tests whose maximum
    /// sits on the circle).
    pub certified_zero: &'a dyn Fn(&[Vec2; 3]) -> bool,
    /// Upper bound for `|f|` on the triangle.
    pub bound: &'a dyn Fn(&[Vec2; 3]) -> f64,
}

struct Cell {
    v: [Vec2; 3],
    /// Radius to snap edge midpoints to when the edge approximates a circular
    /// arc centered at the origin (edge `i` runs `v[i] -> v[(i+1)%3]`).
    arc: [Option<f64>; 3],
    val: f64,
    err: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn eval_cell(v: [Vec2; 3], arc: [Option<f64>; 3], integrand: &Integrand) -> Cell {
    if (integrand.certified_zero)(&v) {
        return Cell {
            v,
            arc,
            val: 0.0,
            err: 0.0,
        };
    }
    let area = ((v[1] - v[0]).cross(v[2] - v[0]) / 2.0).abs();
    let bary = |a: f64, b: f64, c: f64| v[0] * a + v[1] * b + v[2] * c;
    let f = integrand.f;
    let mut vals7 = 0.0;
    let mut max_abs = 0.0f64;
    let mut acc = |w: f64, p: Vec2| {
        let y = f(p);
        max_abs = max_abs.max(y.abs());
        vals7 += w * y;
    };
    acc(W_CENTROID, bary(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0));
    let (a, b) = (A_NEAR_EDGE, (1.0 - A_NEAR_EDGE) / 2.0);
    acc(W_NEAR_EDGE, bary(a, b, b));
    acc(W_NEAR_EDGE, bary(b, a, b));
    acc(W_NEAR_EDGE, bary(b, b, a));
    let (a, b) = (A_NEAR_VERT, (1.0 - A_NEAR_VERT) / 2.0);
    acc(W_NEAR_VERT, bary(a, b, b));
    acc(W_NEAR_VERT, bary(b, a, b));
    acc(W_NEAR_VERT, bary(b, b, a));
    // Embedded degree-2 companion rule at edge midpoints.
    let mut vals3 = 0.0;
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        let p = (v[i] + v[j]) * 0.5;
        let y = f(p);
        max_abs = max_abs.max(y.abs());
        vals3 += y / 3.0;
    }
    let magnitude = if max_abs > 0.0 {
        max_abs
    } else {
        // Support may be thinner than the sampling: refine against the bound.
        (integrand.bound)(&v)
    };
    let mut err = if max_abs > 0.0 {
        area * (vals7 - vals3).abs()
    } else {
        0.5 * area * magnitude
    };
    // Circular slivers between chord and arc are invisible to the rules;
    // charge their area explicitly so rim cells keep refining.
    for (i, radius) in arc.iter().enumerate() {
        if let Some(radius) = radius {
            let chord = (v[(i + 1) % 3] - v[i]).norm();
            let half = (chord / (2.0 * radius)).min(1.0);
            let angle = 2.0 * half.asin();
            let sliver = 0.5 * radius * radius * (angle - angle.sin());
            err += sliver * magnitude;
        }
    }
    Cell {
        v,
        arc,
        val: area * vals7,
        err,
    }
}

fn split_cell(cell: &Cell, integrand: &Integrand) -> [Cell; 4] {
    let v = cell.v;
    let mut mids = [Vec2::ZERO; 3];
    for i in 0..3 {
        let m = (v[i] + v[(i + 1) % 3]) * 0.5;
        mids[i] = match cell.arc[i] {
            Some(radius) => m * (radius / m.norm()),
            None => m,
        };
    }
    let a = cell.arc;
    [
        eval_cell([v[0], mids[0], mids[2]], [a[0], None, a[2]], integrand),
        eval_cell([mids[0], v[1], mids[1]], [a[0], a[1], None], integrand),
        eval_cell([mids[2], mids[1], v[2]], [None, a[1], a[2]], integrand),
        eval_cell([mids[0], mids[1], mids[2]], [None, None, None], integrand),
    ]
}

fn seed_cells(region: &ConvexRegion) -> Vec<([Vec2; 3], [Option<f64>; 3])> {
    if let Some(radius) = region.disc_radius() {
        let wedges = 16;
        let rim: Vec<Vec2> = (0..wedges)
            .map(|i| {
                let ang = std::f64::consts::TAU * i as f64 / wedges as f64;
                Vec2::new(radius * ang.cos(), radius * ang.sin())
            })
            .collect();
        (0..wedges)
            .map(|i| {
                let a = rim[i];
                let b = rim[(i + 1) % wedges];
                ([Vec2::ZERO, a, b], [None, Some(radius), None])
            })
            .collect()
    } else {
        let verts = region.vertices().expect("non-disc regions expose vertices");
        let n = verts.len();
        let centroid = verts.iter().fold(Vec2::ZERO, |s, v| s + *v) * (1.0 / n as f64);
        (0..n)
            .map(|i| ([centroid, verts[i], verts[(i + 1) % n]], [None; 3]))
            .collect()
    }
}

/// Adaptive integral of `integrand` over `region`.
///
/// Refinement proceeds stage by stage (a stage doubles the cell count);
/// convergence requires the summed cell indicators and the last
/// stage-to-stage change to drop below `rel_tol` relative to the current
/// value, or below the absolute floor `abs_tol` (whichever is larger).
/// Exceeding `max_cells` yields a convergence error carrying the best
/// estimate.
pub fn integrate(
    region: &ConvexRegion,
    integrand: &Integrand,
    rel_tol: f64,
    abs_tol: f64,
    max_cells: usize,
) -> Result<QuadratureOutcome> {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err_total = 0.0;
    for (v, arc) in seed_cells(region) {
        let cell = eval_cell(v, arc, integrand);
        total += cell.val;
        err_total += cell.err;
        heap.push(cell);
    }
    let mut cells = heap.len();
    let mut stage_total = total;
    let mut stage_change = f64::INFINITY;
    let mut next_stage = cells * 2;
    loop {
        let scale = (rel_tol * total.abs()).max(abs_tol).max(1e-300);
        if err_total <= scale && (stage_change <= scale || err_total == 0.0) {
            return Ok(QuadratureOutcome {
                value: total,
                error: if stage_change.is_finite() {
                    err_total.max(stage_change)
                } else {
                    err_total
                },
                cells,
            });
        }
        if cells + 3 > max_cells {
            return Err(Error::Convergence {
                best: total,
                error: err_total,
                cells,
            });
        }
        let worst = heap.pop().expect("heap never empties while error is positive");
        total -= worst.val;
        err_total -= worst.err;
        for child in split_cell(&worst, integrand) {
            total += child.val;
            err_total += child.err;
            heap.push(child);
        }
        err_total = err_total.max(0.0);
        cells += 3;
        if cells >= next_stage {
            // Rebuild the running sums from the heap; incremental updates
            // accumulate rounding debris over many splits.
            total = heap.iter().map(|c| c.val).sum();
            err_total = heap.iter().map(|c| c.err).sum();
            stage_change = (total - stage_total).abs();
            stage_total = total;
            next_stage = cells * 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Plain integrand with no support information.
    fn plain<'a>(f: &'a dyn Fn(Vec2) -> f64) -> Integrand<'a> {
        const NEVER: &dyn Fn(&[Vec2; 3]) -> bool = &|_| false;
        const ONE: &dyn Fn(&[Vec2; 3]) -> f64 = &|_| 1.0;
        Integrand {
            f,
            certified_zero: NEVER,
            bound: ONE,
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let sq = ConvexRegion::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        let f = |p: Vec2| p.x * p.x * p.y + 3.0;
        let out = integrate(&sq, &plain(&f), 1e-8, 0.0, 100_000).unwrap();
        assert_abs_diff_eq!(out.value, 1.0 / 6.0 + 3.0, epsilon = 1e-10);
    }

    #[test]
    fn integrates_disc_area() {
        let d = ConvexRegion::disc(1.5).unwrap();
        let f = |_: Vec2| 1.0;
        let out = integrate(&d, &plain(&f), 1e-6, 0.0, 400_000).unwrap();
        assert_abs_diff_eq!(
            out.value,
            std::f64::consts::PI * 2.25,
            epsilon = 1e-4 * 7.0
        );
    }

    #[test]
    fn zero_integrand_converges_immediately() {
        let d = ConvexRegion::disc(2.0).unwrap();
        let f = |_: Vec2| 0.0;
        let zero = |_: &[Vec2; 3]| true;
        let bound = |_: &[Vec2; 3]| 0.0;
        let out = integrate(
            &d,
            &Integrand {
                f: &f,
                certified_zero: &zero,
                bound: &bound,
            },
            1e-8,
            0.0,
            1_000,
        )
        .unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.error, 0.0);
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let d = ConvexRegion::disc(1.0).unwrap();
        // A needle the embedded rule resolves slowly.
        let f = |p: Vec2| if p.x.abs() < 1e-3 { 1.0 } else { 0.0 };
        match integrate(&d, &plain(&f), 1e-8, 0.0, 64) {
            Err(Error::Convergence { cells, .. }) => assert!(cells <= 64),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn thin_annulus_support_is_found() {
        // Integrand supported on a thin ring at the rim (the shape of the
        // moment-series terms); blind-cell refinement must find it even
        // though the seed samples all miss.
        let radius = 2.5;
        let d = ConvexRegion::disc(radius).unwrap();
        let lo = 2.35;
        let f = move |p: Vec2| if p.norm() > lo { 1.0 } else { 0.0 };
        let zero = move |v: &[Vec2; 3]| v.iter().all(|p| p.norm() <= lo);
        let bound = |_: &[Vec2; 3]| 1.0;
        // A sharp indicator converges slowly (the series integrands vanish
        // continuously at their support edge instead), so a modest tolerance
        // suffices to test support discovery.
        let out = integrate(
            &d,
            &Integrand {
                f: &f,
                certified_zero: &zero,
                bound: &bound,
            },
            1e-3,
            0.0,
            400_000,
        )
        .unwrap();
        let expect = std::f64::consts::PI * (radius * radius - lo * lo);
        assert!(
            (out.value - expect).abs() < 0.02 * expect,
            "got {} expected {expect}",
            out.value
        );
    }
}
