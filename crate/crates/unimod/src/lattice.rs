//! Exact computations on rank-2 unimodular lattices.
//!
//! A lattice is represented by a determinant-one basis matrix whose columns
//! span it.  The module provides Lagrange (two-dimensional Gauss-style)
//! reduction, the shortest vector in the supremum norm with a certified
//! enumeration radius, the cusp-excursion function `delta`, primitive-point
//! enumeration inside convex regions, and the diagonal flow
//! `diag(e^s, e^{-s})`.

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::regions::ConvexRegion;
use num_integer::Integer;
use serde::Serialize;
use std::str::FromStr;

/// Tolerance on `|det - 1|` for accepted bases.
pub const DET_TOL: f64 = 1e-12;

/// Condition-number cap applied when validating externally supplied bases.
/// Bases produced internally (reduction, flow steps, Haar sampling) are kept
/// well-formed structurally and bypass the cap, since deep cusp excursions
/// are legitimately ill-conditioned.
pub const DEFAULT_CONDITION_CAP: f64 = 1e8;

/// Default cap on the number of coefficient pairs visited during
/// primitive-point enumeration.
pub const DEFAULT_ENUM_CAP: u64 = 10_000_000;

/// Basis of a unimodular lattice in the plane; `b1`, `b2` are the columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeBasis {
    b1: Vec2,
    b2: Vec2,
}

/// A lattice vector together with its integer coefficients in the owning
/// basis: `coords = m * b1 + n * b2` for `coeffs = (m, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticePoint {
    pub coeffs: (i64, i64),
    pub coords: Vec2,
}

/// Decision of a `K_r` membership query, carrying the signed margin
/// `r - delta` so downstream grid searches can certify the outcome.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KrMembership {
    pub inside: bool,
    pub margin: f64,
}

impl LatticeBasis {
    /// Validates and accepts an externally supplied basis.
    pub fn new(b1: Vec2, b2: Vec2) -> Result<LatticeBasis> {
        Self::with_condition_cap(b1, b2, DEFAULT_CONDITION_CAP)
    }

    /// As [`LatticeBasis::new`] with an explicit condition-number cap.
    pub fn with_condition_cap(b1: Vec2, b2: Vec2, cap: f64) -> Result<LatticeBasis> {
        if !b1.is_finite() || !b2.is_finite() {
            return Err(Error::InvalidBasis("non-finite entries".into()));
        }
        let det = b1.cross(b2);
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::InvalidBasis(format!(
                "determinant {det} differs from 1 by more than {DET_TOL}"
            )));
        }
        let basis = LatticeBasis { b1, b2 };
        let cond = basis.condition_number();
        if cond > cap {
            return Err(Error::InvalidBasis(format!(
                "condition number {cond:.3e} exceeds cap {cap:.1e}"
            )));
        }
        Ok(basis)
    }

    /// Accepts columns from internal constructions, pinning the determinant
    /// to one exactly.  Rejects only structural failures.
    pub(crate) fn from_columns_renormalized(b1: Vec2, b2: Vec2) -> Result<LatticeBasis> {
        if !b1.is_finite() || !b2.is_finite() {
            return Err(Error::OutOfRange("basis entries overflowed".into()));
        }
        let det = b1.cross(b2);
        if !(det > 0.5 && det < 2.0) {
            return Err(Error::Internal(format!(
                "internally produced basis has determinant {det}"
            )));
        }
        let s = det.sqrt().recip();
        Ok(LatticeBasis { b1: b1 * s, b2: b2 * s })
    }

    /// The integer lattice Z^2.
    pub fn integer_lattice() -> LatticeBasis {
        LatticeBasis {
            b1: Vec2::new(1.0, 0.0),
            b2: Vec2::new(0.0, 1.0),
        }
    }

    /// The horocycle translate with basis columns `(1, 0)` and `(x, 1)`
    /// (the unipotent shear with upper-right entry `x`).
    pub fn shear(x: f64) -> Result<LatticeBasis> {
        if !x.is_finite() {
            return Err(Error::InvalidBasis("shear parameter must be finite".into()));
        }
        Ok(LatticeBasis {
            b1: Vec2::new(1.0, 0.0),
            b2: Vec2::new(x, 1.0),
        })
    }

    pub fn columns(&self) -> (Vec2, Vec2) {
        (self.b1, self.b2)
    }

    pub fn det(&self) -> f64 {
        self.b1.cross(self.b2)
    }

    /// Ratio of the singular values of the basis matrix.
    pub fn condition_number(&self) -> f64 {
        let f2 = self.b1.norm_sq() + self.b2.norm_sq();
        let det = self.det().abs();
        // sigma_max^2 = (f2 + sqrt(f2^2 - 4 det^2)) / 2, cond = sigma_max^2 / det.
        let disc = (f2 * f2 - 4.0 * det * det).max(0.0);
        (f2 + disc.sqrt()) / (2.0 * det)
    }

    /// The lattice vector with the given coefficients.
    pub fn point(&self, m: i64, n: i64) -> LatticePoint {
        LatticePoint {
            coeffs: (m, n),
            coords: self.b1 * m as f64 + self.b2 * n as f64,
        }
    }

    /// Lagrange-reduced basis of the same lattice: `|b1| <= |b2|` in the
    /// Euclidean norm, `|<b1, b2>| <= |b1|^2 / 2`, and `b1` a Euclidean-
    /// shortest nonzero vector.  Rounding of the size-reduction coefficient
    /// is half-away-from-zero, which makes tie handling deterministic.
    pub fn gauss_reduce(&self) -> LatticeBasis {
        let (basis, _) = self.reduce_with_transform();
        basis
    }

    /// Reduction together with the unimodular coefficient change: the
    /// returned rows `u_a`, `u_b` express the reduced columns in the original
    /// basis, `a = u_a.0 * b1 + u_a.1 * b2` and likewise for `b`.
    fn reduce_with_transform(&self) -> (LatticeBasis, [(i64, i64); 2]) {
        let mut a = self.b1;
        let mut b = self.b2;
        let mut ua = (1i64, 0i64);
        let mut ub = (0i64, 1i64);
        // Swap via (a, b) -> (b, -a) so the determinant stays +1.
        let swap = |a: &mut Vec2, b: &mut Vec2, ua: &mut (i64, i64), ub: &mut (i64, i64)| {
            std::mem::swap(a, b);
            *b = -*b;
            std::mem::swap(ua, ub);
            *ub = (-ub.0, -ub.1);
        };
        if a.norm_sq() > b.norm_sq() {
            swap(&mut a, &mut b, &mut ua, &mut ub);
        }
        for _ in 0..64 {
            let mu = (a.dot(b) / a.norm_sq()).round();
            if mu != 0.0 {
                b = b - a * mu;
                let mi = mu as i64;
                ub = (ub.0 - mi * ua.0, ub.1 - mi * ua.1);
            }
            if b.norm_sq() < a.norm_sq() {
                swap(&mut a, &mut b, &mut ua, &mut ub);
            } else {
                break;
            }
        }
        // Pin the determinant against floating-point drift.
        let det = a.cross(b);
        let s = det.sqrt().recip();
        (LatticeBasis { b1: a * s, b2: b * s }, [ua, ub])
    }

    /// Minimum of the supremum norm over nonzero lattice vectors.
    ///
    /// The optimum `v` satisfies `|v|_2 <= sqrt(2) |v|_inf`, so enumerating
    /// all vectors of Euclidean norm up to `sqrt(2)` times the best candidate
    /// sup norm is exhaustive.
    pub fn shortest_sup_norm(&self) -> f64 {
        let (red, _) = self.reduce_with_transform();
        let a = red.b1;
        let b = red.b2;
        let mut best = a
            .sup_norm()
            .min(b.sup_norm())
            .min((a + b).sup_norm())
            .min((a - b).sup_norm());
        // Certified enumeration radius.
        let r2 = 2.0 * best * best * (1.0 + 1e-9);
        let mu = a.dot(b) / a.norm_sq();
        let bstar_sq = (b - a * mu).norm_sq();
        let a_len = a.norm();
        let n_max = (r2 / bstar_sq).sqrt().floor() as i64;
        for n in -n_max..=n_max {
            let rem = r2 - (n * n) as f64 * bstar_sq;
            if rem < 0.0 {
                continue;
            }
            let half_w = rem.sqrt() / a_len;
            let center = -mu * n as f64;
            let m_lo = (center - half_w).ceil() as i64;
            let m_hi = (center + half_w).floor() as i64;
            for m in m_lo..=m_hi {
                if m == 0 && n == 0 {
                    continue;
                }
                let v = a * m as f64 + b * n as f64;
                best = best.min(v.sup_norm());
            }
        }
        best
    }

    /// `delta = -log` of the shortest sup norm; non-negative for every
    /// unimodular lattice by Minkowski's convex body theorem.
    pub fn delta(&self) -> Result<f64> {
        let d = -self.shortest_sup_norm().ln();
        if d < -1e-9 {
            return Err(Error::Internal(format!(
                "delta computed as {d}, below the Minkowski bound"
            )));
        }
        Ok(d.max(0.0))
    }

    /// Whether the lattice lies in `K_r` (all nonzero vectors of sup norm at
    /// least `e^{-r}`), with the signed margin `r - delta`.
    pub fn in_kr(&self, r: f64) -> Result<KrMembership> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("K_r threshold must be >= 0, got {r}")));
        }
        let margin = r - self.delta()?;
        Ok(KrMembership {
            inside: margin >= 0.0,
            margin,
        })
    }

    /// Primitive lattice points inside the region, in increasing `(n, m)`
    /// coefficient order.
    pub fn primitive_points_in(&self, region: &ConvexRegion) -> Result<Vec<LatticePoint>> {
        self.primitive_points_in_capped(region, DEFAULT_ENUM_CAP)
    }

    /// As [`LatticeBasis::primitive_points_in`] with an explicit cap on the
    /// enumeration volume.
    pub fn primitive_points_in_capped(
        &self,
        region: &ConvexRegion,
        cap: u64,
    ) -> Result<Vec<LatticePoint>> {
        let radius = region.outer_radius();
        if radius <= 0.0 {
            return Ok(Vec::new());
        }
        let (red, u) = self.reduce_with_transform();
        let a = red.b1;
        let b = red.b2;
        let mu = a.dot(b) / a.norm_sq();
        let bstar_sq = (b - a * mu).norm_sq();
        let a_len = a.norm();
        let r2 = radius * radius * (1.0 + 1e-9);
        let n_max = (r2 / bstar_sq).sqrt().floor();
        let est = (2.0 * n_max + 1.0) * (2.0 * radius / a_len + 2.0);
        if est > cap as f64 {
            return Err(Error::EnumerationCap {
                estimated: est as u64,
                cap,
            });
        }
        let n_max = n_max as i64;
        let mut out = Vec::new();
        for n in -n_max..=n_max {
            let rem = r2 - (n * n) as f64 * bstar_sq;
            if rem < 0.0 {
                continue;
            }
            let half_w = rem.sqrt() / a_len;
            let center = -mu * n as f64;
            let m_lo = (center - half_w).ceil() as i64;
            let m_hi = (center + half_w).floor() as i64;
            for m in m_lo..=m_hi {
                if m == 0 && n == 0 {
                    continue;
                }
                // Primitivity is invariant under the unimodular coefficient
                // change, so test it on the reduced coefficients.
                if m.unsigned_abs().gcd(&n.unsigned_abs()) != 1 {
                    continue;
                }
                let v = a * m as f64 + b * n as f64;
                if region.contains(v) {
                    let orig_m = m * u[0].0 + n * u[1].0;
                    let orig_n = m * u[0].1 + n * u[1].1;
                    out.push(LatticePoint {
                        coeffs: (orig_m, orig_n),
                        coords: v,
                    });
                }
            }
        }
        out.sort_by_key(|p| (p.coeffs.1, p.coeffs.0));
        Ok(out)
    }

    /// Number of primitive points inside the region (the primitive counting
    /// transform evaluated at the region's indicator).
    pub fn primitive_count_in(&self, region: &ConvexRegion) -> Result<u64> {
        Ok(self.primitive_points_in(region)?.len() as u64)
    }

    /// Applies the diagonal flow `diag(e^s, e^{-s})`: first coordinates scale
    /// by `e^s`, second coordinates by `e^{-s}`.  The determinant is
    /// preserved; the result may be arbitrarily ill-conditioned, so callers
    /// iterating flows should re-reduce between steps.
    pub fn apply_flow(&self, s: f64) -> Result<LatticeBasis> {
        if !s.is_finite() {
            return Err(Error::OutOfRange(format!("flow time must be finite, got {s}")));
        }
        let es = s.exp();
        let ei = (-s).exp();
        if es == 0.0 || ei == 0.0 || !es.is_finite() || !ei.is_finite() {
            return Err(Error::OutOfRange(format!("flow time {s} overflows the exponential")));
        }
        LatticeBasis::from_columns_renormalized(
            Vec2::new(self.b1.x * es, self.b1.y * ei),
            Vec2::new(self.b2.x * es, self.b2.y * ei),
        )
        .map_err(|_| Error::OutOfRange(format!("flow by {s} overflows basis entries")))
    }
}

/// Lattice mini-format for the CLI: `z2`, `shear:x=<f>`, `diag:s=<f>`,
/// `basis:b1x,b1y,b2x,b2y` (columns), or `haar` (drawn from `--seed`).
#[derive(Clone, Debug, PartialEq)]
pub enum LatticeSpec {
    Z2,
    Shear { x: f64 },
    Diag { s: f64 },
    Basis { b1: Vec2, b2: Vec2 },
    Haar,
}

impl LatticeSpec {
    /// Builds the basis for deterministic specs; `Haar` needs a sampler and
    /// returns `None`.
    pub fn instantiate(&self) -> Result<Option<LatticeBasis>> {
        match self {
            LatticeSpec::Z2 => Ok(Some(LatticeBasis::integer_lattice())),
            LatticeSpec::Shear { x } => LatticeBasis::shear(*x).map(Some),
            LatticeSpec::Diag { s } => LatticeBasis::integer_lattice().apply_flow(*s).map(Some),
            LatticeSpec::Basis { b1, b2 } => LatticeBasis::new(*b1, *b2).map(Some),
            LatticeSpec::Haar => Ok(None),
        }
    }
}

impl FromStr for LatticeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<LatticeSpec> {
        let bad = |reason: String| Error::Spec {
            kind: "lattice",
            input: s.to_string(),
            reason,
        };
        match s {
            "z2" => return Ok(LatticeSpec::Z2),
            "haar" => return Ok(LatticeSpec::Haar),
            _ => {}
        }
        let (head, rest) = s
            .split_once(':')
            .ok_or_else(|| bad("expected `z2`, `haar`, or `<kind>:<params>`".into()))?;
        let kv = |rest: &str, key: &str| -> Result<f64> {
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `{key}=<value>`")))?;
            if k != key {
                return Err(bad(format!("expected key `{key}`, found `{k}`")));
            }
            v.parse::<f64>().map_err(|_| bad(format!("bad float `{v}`")))
        };
        match head {
            "shear" => Ok(LatticeSpec::Shear { x: kv(rest, "x")? }),
            "diag" => Ok(LatticeSpec::Diag { s: kv(rest, "s")? }),
            "basis" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 4 {
                    return Err(bad(format!(
                        "expected 4 comma-separated entries, found {}",
                        parts.len()
                    )));
                }
                let vals: Vec<f64> = parts
                    .iter()
                    .map(|p| p.parse::<f64>().map_err(|_| bad(format!("bad float `{p}`"))))
                    .collect::<Result<_>>()?;
                Ok(LatticeSpec::Basis {
                    b1: Vec2::new(vals[0], vals[1]),
                    b2: Vec2::new(vals[2], vals[3]),
                })
            }
            other => Err(bad(format!("unknown lattice kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Exhaustive search over small coefficients; the independent oracle for
    /// shortest-vector assertions.
    fn brute_force_shortest(basis: &LatticeBasis, bound: i64) -> (f64, f64) {
        let (b1, b2) = basis.columns();
        let mut best_sup = f64::INFINITY;
        let mut best_euc = f64::INFINITY;
        for m in -bound..=bound {
            for n in -bound..=bound {
                if m == 0 && n == 0 {
                    continue;
                }
                let v = b1 * m as f64 + b2 * n as f64;
                best_sup = best_sup.min(v.sup_norm());
                best_euc = best_euc.min(v.norm());
            }
        }
        (best_sup, best_euc)
    }

    #[test]
    fn identity_already_reduced() {
        let z2 = LatticeBasis::integer_lattice();
        let red = z2.gauss_reduce();
        assert_eq!(red.columns().0.sup_norm(), 1.0);
        assert_eq!(red.columns().1.sup_norm(), 1.0);
        assert_abs_diff_eq!(red.det(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn reduce_sheared_basis() {
        let basis = LatticeBasis::new(Vec2::new(1.0, 0.0), Vec2::new(5.0, 1.0)).unwrap();
        let red = basis.gauss_reduce();
        let (a, b) = red.columns();
        // Brute force over |m|, |n| <= 6 says the two shortest vectors are
        // unit vectors.
        let (_, best_euc) = brute_force_shortest(&basis, 6);
        assert_abs_diff_eq!(a.norm(), best_euc, epsilon = 1e-12);
        assert_abs_diff_eq!(a.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.norm(), 1.0, epsilon = 1e-12);
        assert!(a.dot(b).abs() <= 0.5 * a.norm_sq() + 1e-12);
        assert_abs_diff_eq!(red.det(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reduce_orthogonal_flow_basis() {
        let basis = LatticeBasis::integer_lattice().apply_flow(1.0).unwrap();
        let red = basis.gauss_reduce();
        let (a, b) = red.columns();
        // Same orthogonal pair, shorter column first (up to sign).
        assert!(a.norm() <= b.norm());
        assert_abs_diff_eq!(a.norm(), (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.norm(), 1.0f64.exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(a.dot(b), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn shortest_sup_norm_examples() {
        assert_abs_diff_eq!(
            LatticeBasis::integer_lattice().shortest_sup_norm(),
            1.0,
            epsilon = 1e-15
        );
        let flowed = LatticeBasis::integer_lattice().apply_flow(0.7).unwrap();
        assert_abs_diff_eq!(flowed.shortest_sup_norm(), (-0.7f64).exp(), epsilon = 1e-12);
        let skew = LatticeBasis::new(Vec2::new(1.0, 0.5), Vec2::new(0.0, 1.0)).unwrap();
        let (oracle, _) = brute_force_shortest(&skew, 4);
        assert_abs_diff_eq!(skew.shortest_sup_norm(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn delta_examples() {
        assert_abs_diff_eq!(LatticeBasis::integer_lattice().delta().unwrap(), 0.0);
        let flowed = LatticeBasis::integer_lattice().apply_flow(0.3).unwrap();
        assert_abs_diff_eq!(flowed.delta().unwrap(), 0.3, epsilon = 1e-12);
        let sheared = LatticeBasis::shear(0.37).unwrap();
        assert_abs_diff_eq!(sheared.delta().unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn kr_membership_examples() {
        let z2 = LatticeBasis::integer_lattice();
        let m = z2.in_kr(0.0).unwrap();
        assert!(m.inside);
        assert_abs_diff_eq!(m.margin, 0.0, epsilon = 1e-12);

        let flowed = z2.apply_flow(0.5).unwrap();
        let m = flowed.in_kr(0.3).unwrap();
        assert!(!m.inside);
        assert_abs_diff_eq!(m.margin, -0.2, epsilon = 1e-12);

        assert!(z2.in_kr(-0.1).is_err());
    }

    #[test]
    fn enumerate_open_square_excludes_boundary() {
        let z2 = LatticeBasis::integer_lattice();
        let sq = ConvexRegion::shrinking_square(0.0).unwrap();
        assert!(z2.primitive_points_in(&sq).unwrap().is_empty());
    }

    #[test]
    fn enumerate_closed_disc() {
        let z2 = LatticeBasis::integer_lattice();
        let disc = ConvexRegion::disc(1.5).unwrap().closed();
        let pts = z2.primitive_points_in(&disc).unwrap();
        // Brute force over |m|, |n| <= 2: the eight vectors of norm <= 1.5
        // with coprime coefficients.
        assert_eq!(pts.len(), 8);
        let coeffs: std::collections::BTreeSet<(i64, i64)> =
            pts.iter().map(|p| p.coeffs).collect();
        let expected: std::collections::BTreeSet<(i64, i64)> =
            [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
                .into_iter()
                .collect();
        assert_eq!(coeffs, expected);
    }

    #[test]
    fn enumerate_respects_cap() {
        let z2 = LatticeBasis::integer_lattice();
        let disc = ConvexRegion::disc(100.0).unwrap();
        match z2.primitive_points_in_capped(&disc, 100) {
            Err(Error::EnumerationCap { .. }) => {}
            other => panic!("expected enumeration cap error, got {other:?}"),
        }
    }

    #[test]
    fn enumeration_closed_under_negation() {
        let b1 = Vec2::new(1.2, 0.3);
        let b2 = Vec2::new(0.5, (1.0 + 0.3 * 0.5) / 1.2);
        let basis = LatticeBasis::new(b1, b2).unwrap();
        let disc = ConvexRegion::disc(2.0).unwrap();
        let pts = basis.primitive_points_in(&disc).unwrap();
        assert!(!pts.is_empty());
        let set: std::collections::BTreeSet<(i64, i64)> =
            pts.iter().map(|p| p.coeffs).collect();
        for &(m, n) in &set {
            assert!(set.contains(&(-m, -n)), "negation of ({m},{n}) missing");
        }
    }

    #[test]
    fn flow_identity_and_inverse() {
        let z2 = LatticeBasis::integer_lattice();
        let same = z2.apply_flow(0.0).unwrap();
        assert_eq!(same.columns(), z2.columns());

        let basis = LatticeBasis::shear(0.37).unwrap();
        let fwd = basis.apply_flow(0.9).unwrap();
        let back = fwd.apply_flow(-0.9).unwrap();
        let (b1, b2) = basis.columns();
        let (c1, c2) = back.columns();
        assert_abs_diff_eq!(b1.x, c1.x, epsilon = 1e-12);
        assert_abs_diff_eq!(b1.y, c1.y, epsilon = 1e-12);
        assert_abs_diff_eq!(b2.x, c2.x, epsilon = 1e-12);
        assert_abs_diff_eq!(b2.y, c2.y, epsilon = 1e-12);
    }

    #[test]
    fn flow_overflow_rejected() {
        let z2 = LatticeBasis::integer_lattice();
        assert!(z2.apply_flow(1e4).is_err());
        assert!(z2.apply_flow(f64::NAN).is_err());
    }

    #[test]
    fn rejects_bad_bases() {
        assert!(LatticeBasis::new(Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0)).is_err());
        assert!(LatticeBasis::new(Vec2::new(f64::NAN, 0.0), Vec2::new(0.0, 1.0)).is_err());
        // Condition cap: a fine lattice, but a pathological basis for it.
        let huge = 3e4;
        let b1 = Vec2::new(huge, (huge * huge - 1.0) / huge);
        let b2 = Vec2::new(huge, huge);
        let det = b1.cross(b2);
        assert!((det - 1.0).abs() < 1e-6);
        assert!(LatticeBasis::new(b1, b2).is_err());
    }

    #[test]
    fn parse_lattice_specs() {
        assert_eq!("z2".parse::<LatticeSpec>().unwrap(), LatticeSpec::Z2);
        assert_eq!("haar".parse::<LatticeSpec>().unwrap(), LatticeSpec::Haar);
        assert_eq!(
            "shear:x=0.37".parse::<LatticeSpec>().unwrap(),
            LatticeSpec::Shear { x: 0.37 }
        );
        assert_eq!(
            "diag:s=0.5".parse::<LatticeSpec>().unwrap(),
            LatticeSpec::Diag { s: 0.5 }
        );
        assert!("basis:1,0,0.37".parse::<LatticeSpec>().is_err());
        assert!("shear:x=1,2".parse::<LatticeSpec>().is_err());
        assert!("spiral:x=1".parse::<LatticeSpec>().is_err());
    }

    #[test]
    fn random_bases_match_exhaustive_search() {
        // Sup-norm shortest vector vs exhaustive search over |m|,|n| <= 25 on
        // well-conditioned random bases.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31415);
        for _ in 0..2_000 {
            let x: f64 = rng.gen_range(-0.5..0.5);
            let y: f64 = rng.gen_range(0.87..3.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let u = y.sqrt().recip();
            let b1 = Vec2::new(u, 0.0).rotated(phi);
            let b2 = Vec2::new(u * x, u * y).rotated(phi);
            let basis = LatticeBasis::new(b1, b2).unwrap();
            let (oracle, _) = brute_force_shortest(&basis, 25);
            assert_abs_diff_eq!(basis.shortest_sup_norm(), oracle, epsilon = 1e-11);
        }
    }
}
