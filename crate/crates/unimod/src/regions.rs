//! Bounded convex regions of the plane.
//!
//! Regions support point membership (honoring open/closed boundaries),
//! exact areas, the area of the intersection with the reflection through the
//! origin, and the computation of the parameter interval along which a line
//! meets the region.  All integrals downstream treat open and closed
//! variants identically; openness only matters for point queries.

use crate::error::{Error, Result};
use crate::geom::Vec2;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    /// Axis-aligned square `[-half, half]^2`.
    Square { half: f64 },
    /// Disc of the given radius centered at the origin.
    Disc { radius: f64 },
    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    /// Strictly convex polygon, vertices counterclockwise.
    Polygon { verts: Vec<Vec2> },
}

/// A bounded convex subset of the plane.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexRegion {
    shape: Shape,
    open: bool,
    area: f64,
    outer_radius: f64,
    inner_radius: f64,
}

/// A parameter interval along a line; empty when `lo > hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const EMPTY: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    fn intersect(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }
}

fn polygon_area(verts: &[Vec2]) -> f64 {
    let n = verts.len();
    let mut twice = 0.0;
    for i in 0..n {
        twice += verts[i].cross(verts[(i + 1) % n]);
    }
    twice / 2.0
}

impl ConvexRegion {
    fn build(shape: Shape, open: bool) -> ConvexRegion {
        let (area, outer, inner) = match &shape {
            Shape::Square { half } => (4.0 * half * half, half * std::f64::consts::SQRT_2, *half),
            Shape::Disc { radius } => (std::f64::consts::PI * radius * radius, *radius, *radius),
            Shape::Rect { x0, y0, x1, y1 } => {
                let area = (x1 - x0) * (y1 - y0);
                let outer = [
                    Vec2::new(*x0, *y0),
                    Vec2::new(*x1, *y0),
                    Vec2::new(*x1, *y1),
                    Vec2::new(*x0, *y1),
                ]
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max);
                let inner = (-x0).min(*x1).min(-y0).min(*y1).max(0.0);
                (area, outer, inner)
            }
            Shape::Polygon { verts } => {
                let area = polygon_area(verts);
                let outer = verts.iter().map(|v| v.norm()).fold(0.0, f64::max);
                // Distance from the origin to the boundary, zero when the
                // origin is not interior.
                let n = verts.len();
                let mut inner = f64::INFINITY;
                for i in 0..n {
                    let a = verts[i];
                    let e = verts[(i + 1) % n] - a;
                    let d = e.cross(-a) / e.norm();
                    inner = inner.min(d);
                }
                (area, outer, inner.max(0.0))
            }
        };
        ConvexRegion {
            shape,
            open,
            area,
            outer_radius: outer,
            inner_radius: inner,
        }
    }

    /// Open square with vertices `(±e^{-r}, ±e^{-r})`.
    pub fn shrinking_square(r: f64) -> Result<ConvexRegion> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Domain(format!("square parameter r must be >= 0, got {r}")));
        }
        Ok(Self::build(Shape::Square { half: (-r).exp() }, true))
    }

    /// Closed axis-aligned square `[-half, half]^2`.
    pub fn centered_square(half: f64) -> Result<ConvexRegion> {
        if !(half > 0.0) || !half.is_finite() {
            return Err(Error::Domain(format!("square half-side must be positive, got {half}")));
        }
        Ok(Self::build(Shape::Square { half }, false))
    }

    /// Open disc of radius `radius` centered at the origin.
    pub fn disc(radius: f64) -> Result<ConvexRegion> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("disc radius must be positive, got {radius}")));
        }
        Ok(Self::build(Shape::Disc { radius }, true))
    }

    /// Closed axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<ConvexRegion> {
        if ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) || x1 <= x0 || y1 <= y0 {
            return Err(Error::Domain(format!(
                "degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(Self::build(Shape::Rect { x0, y0, x1, y1 }, false))
    }

    /// Closed strictly convex polygon with counterclockwise vertices.
    pub fn polygon(verts: Vec<Vec2>) -> Result<ConvexRegion> {
        if verts.len() < 3 {
            return Err(Error::Domain("polygon needs at least 3 vertices".into()));
        }
        if verts.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("polygon vertices must be finite".into()));
        }
        let n = verts.len();
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let c = verts[(i + 2) % n];
            if (b - a).cross(c - b) <= 0.0 {
                return Err(Error::Domain(format!(
                    "polygon not strictly convex counterclockwise at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        if polygon_area(&verts) <= 0.0 {
            return Err(Error::Domain("polygon has non-positive area".into()));
        }
        Ok(Self::build(Shape::Polygon { verts }, false))
    }

    /// Closed rectangle `[-sqrt(e^{2r}-1), sqrt(e^{2r}-1)] x [e^{-r}, e^r]`,
    /// a thin box around the unit vector `(0, 1)`.
    pub fn y_unit_box(r: f64) -> Result<ConvexRegion> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("box parameter r must be positive, got {r}")));
        }
        let w = (2.0 * r).exp_m1().sqrt();
        Self::rect(-w, (-r).exp(), w, r.exp())
    }

    /// Mirror of [`ConvexRegion::y_unit_box`] across the diagonal: a thin box
    /// around `(1, 0)`.
    pub fn x_unit_box(r: f64) -> Result<ConvexRegion> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("box parameter r must be positive, got {r}")));
        }
        let w = (2.0 * r).exp_m1().sqrt();
        Self::rect((-r).exp(), -w, r.exp(), w)
    }

    /// Closed rectangle `[-e^{-r}, e^{-r}] x [e^{-r}, e^r]` flanking the
    /// shrinking square from above.  Exposed for exploratory testing only.
    pub fn upper_flank_box(r: f64) -> Result<ConvexRegion> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("box parameter r must be positive, got {r}")));
        }
        Self::rect(-(-r).exp(), (-r).exp(), (-r).exp(), r.exp())
    }

    /// Closed rectangle `[e^{-r}, e^r] x [-e^{-r}, e^{-r}]` flanking the
    /// shrinking square from the right.  Exposed for exploratory testing only.
    pub fn right_flank_box(r: f64) -> Result<ConvexRegion> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("box parameter r must be positive, got {r}")));
        }
        Self::rect((-r).exp(), -(-r).exp(), r.exp(), (-r).exp())
    }

    /// Same region with a closed boundary.
    pub fn closed(mut self) -> ConvexRegion {
        self.open = false;
        self
    }

    /// Same region with an open boundary.
    pub fn opened(mut self) -> ConvexRegion {
        self.open = true;
        self
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Maximal Euclidean norm over the closure.
    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// Distance from the origin to the boundary (zero when the origin is not
    /// interior).
    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn contains(&self, p: Vec2) -> bool {
        if !p.is_finite() {
            return false;
        }
        let lt = |a: f64, b: f64| if self.open { a < b } else { a <= b };
        match &self.shape {
            Shape::Square { half } => lt(p.x.abs(), *half) && lt(p.y.abs(), *half),
            Shape::Disc { radius } => lt(p.norm_sq(), radius * radius),
            Shape::Rect { x0, y0, x1, y1 } => {
                lt(*x0, p.x) && lt(p.x, *x1) && lt(*y0, p.y) && lt(p.y, *y1)
            }
            Shape::Polygon { verts } => {
                let n = verts.len();
                (0..n).all(|i| {
                    let a = verts[i];
                    let e = verts[(i + 1) % n] - a;
                    lt(0.0, e.cross(p - a))
                })
            }
        }
    }

    /// `(area(S), area(S ∩ -S))` where `-S` is the reflection through the
    /// origin.
    pub fn area_and_symmetry(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Square { .. } | Shape::Disc { .. } => (self.area, self.area),
            Shape::Rect { x0, y0, x1, y1 } => {
                let w = (x1.min(-x0) - x0.max(-x1)).max(0.0);
                let h = (y1.min(-y0) - y0.max(-y1)).max(0.0);
                (self.area, w * h)
            }
            Shape::Polygon { verts } => {
                let reflected: Vec<Vec2> = verts.iter().map(|v| -*v).collect();
                // Reflection preserves orientation, so `reflected` is CCW
                // when read in the same order.
                let clipped = clip_convex(verts, &reflected);
                let overlap = if clipped.len() >= 3 {
                    polygon_area(&clipped)
                } else {
                    0.0
                };
                (self.area, overlap)
            }
        }
    }

    pub fn is_centrally_symmetric(&self) -> bool {
        match &self.shape {
            Shape::Square { .. } | Shape::Disc { .. } => true,
            Shape::Rect { x0, y0, x1, y1 } => {
                (x0 + x1).abs() <= 1e-12 && (y0 + y1).abs() <= 1e-12
            }
            Shape::Polygon { verts } => {
                let n = verts.len();
                if n % 2 != 0 {
                    return false;
                }
                let scale = self.outer_radius.max(1.0);
                (0..n).any(|k| {
                    (0..n).all(|i| {
                        let d = verts[(i + k) % n] + verts[i];
                        d.norm() <= 1e-12 * scale
                    })
                })
            }
        }
    }

    /// The set `{t : base + t * dir ∈ region}`, an interval by convexity.
    ///
    /// Boundaries are treated as closed; openness only changes the interval
    /// on a measure-zero set.
    pub fn line_interval(&self, base: Vec2, dir: Vec2) -> Result<Interval> {
        if dir == Vec2::ZERO {
            return Err(Error::OutOfRange("line direction must be nonzero".into()));
        }
        let iv = match &self.shape {
            Shape::Square { half } => {
                slab(base.x, dir.x, -half, *half).intersect(slab(base.y, dir.y, -half, *half))
            }
            Shape::Rect { x0, y0, x1, y1 } => {
                slab(base.x, dir.x, *x0, *x1).intersect(slab(base.y, dir.y, *y0, *y1))
            }
            Shape::Disc { radius } => {
                // |base + t dir|^2 = radius^2
                let a = dir.norm_sq();
                let b = base.dot(dir);
                let c = base.norm_sq() - radius * radius;
                let disc = b * b - a * c;
                if disc <= 0.0 {
                    Interval::EMPTY
                } else {
                    let sq = disc.sqrt();
                    Interval::new((-b - sq) / a, (-b + sq) / a)
                }
            }
            Shape::Polygon { verts } => {
                let n = verts.len();
                let mut iv = Interval::new(f64::NEG_INFINITY, f64::INFINITY);
                for i in 0..n {
                    let a = verts[i];
                    let e = verts[(i + 1) % n] - a;
                    // Inside of edge i: e x (p - a) >= 0, linear in t.
                    let alpha = e.cross(base - a);
                    let beta = e.cross(dir);
                    if beta > 0.0 {
                        iv.lo = iv.lo.max(-alpha / beta);
                    } else if beta < 0.0 {
                        iv.hi = iv.hi.min(-alpha / beta);
                    } else if alpha < 0.0 {
                        return Ok(Interval::EMPTY);
                    }
                    if iv.is_empty() {
                        return Ok(Interval::EMPTY);
                    }
                }
                iv
            }
        };
        Ok(if iv.is_empty() { Interval::EMPTY } else { iv })
    }

    /// Support function `h(u) = max_{v in S} <v, u>` of the closure.
    pub fn support_function(&self, u: Vec2) -> f64 {
        match &self.shape {
            Shape::Square { half } => half * (u.x.abs() + u.y.abs()),
            Shape::Disc { radius } => radius * u.norm(),
            Shape::Rect { x0, y0, x1, y1 } => {
                (x0 * u.x).max(x1 * u.x) + (y0 * u.y).max(y1 * u.y)
            }
            Shape::Polygon { verts } => verts
                .iter()
                .map(|v| v.dot(u))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Counterclockwise vertex list of the closure (discs are not
    /// representable and return `None`).
    pub fn vertices(&self) -> Option<Vec<Vec2>> {
        match &self.shape {
            Shape::Square { half } => Some(vec![
                Vec2::new(*half, *half),
                Vec2::new(-half, *half),
                Vec2::new(-half, -half),
                Vec2::new(*half, -half),
            ]),
            Shape::Rect { x0, y0, x1, y1 } => Some(vec![
                Vec2::new(*x1, *y1),
                Vec2::new(*x0, *y1),
                Vec2::new(*x0, *y0),
                Vec2::new(*x1, *y0),
            ]),
            Shape::Polygon { verts } => Some(verts.clone()),
            Shape::Disc { .. } => None,
        }
    }

    /// Radius of the disc when the region is one.
    pub fn disc_radius(&self) -> Option<f64> {
        match &self.shape {
            Shape::Disc { radius } => Some(*radius),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for ConvexRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Square { half } => write!(f, "square(half={half})"),
            Shape::Disc { radius } => write!(f, "disc(R={radius})"),
            Shape::Rect { x0, y0, x1, y1 } => write!(f, "rect({x0},{y0},{x1},{y1})"),
            Shape::Polygon { verts } => write!(f, "poly({} vertices)", verts.len()),
        }
    }
}

fn slab(b: f64, d: f64, lo: f64, hi: f64) -> Interval {
    if d == 0.0 {
        if b >= lo && b <= hi {
            Interval::new(f64::NEG_INFINITY, f64::INFINITY)
        } else {
            Interval::EMPTY
        }
    } else {
        let t0 = (lo - b) / d;
        let t1 = (hi - b) / d;
        Interval::new(t0.min(t1), t0.max(t1))
    }
}

/// Sutherland-Hodgman clip of a convex CCW subject against a convex CCW clip
/// polygon.
fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let e = clip[(i + 1) % n] - a;
        let input = std::mem::take(&mut out);
        let m = input.len();
        for j in 0..m {
            let p = input[j];
            let q = input[(j + 1) % m];
            let dp = e.cross(p - a);
            let dq = e.cross(q - a);
            if dp >= 0.0 {
                out.push(p);
            }
            if (dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0) {
                let t = dp / (dp - dq);
                out.push(p + (q - p) * t);
            }
        }
    }
    out
}

/// Parsed form of the CLI region mini-format.
///
/// Grammar: `square:r=<f>`, `disc:R=<f>`, `rect:x0,y0,x1,y1`,
/// `poly:x1,y1;x2,y2;...` — trailing garbage is rejected.
impl FromStr for ConvexRegion {
    type Err = Error;

    fn from_str(s: &str) -> Result<ConvexRegion> {
        let bad = |reason: String| Error::Spec {
            kind: "region",
            input: s.to_string(),
            reason,
        };
        let (head, rest) = s
            .split_once(':')
            .ok_or_else(|| bad("expected `<shape>:<params>`".into()))?;
        match head {
            "square" => {
                let r = parse_kv(rest, "r").map_err(bad)?;
                ConvexRegion::shrinking_square(r)
            }
            "disc" => {
                let radius = parse_kv(rest, "R").map_err(bad)?;
                ConvexRegion::disc(radius)
            }
            "rect" => {
                let vals = parse_floats(rest, 4).map_err(bad)?;
                ConvexRegion::rect(vals[0], vals[1], vals[2], vals[3])
            }
            "poly" => {
                let mut verts = Vec::new();
                for pair in rest.split(';') {
                    let vals = parse_floats(pair, 2)
                        .map_err(|e| bad(format!("vertex `{pair}`: {e}")))?;
                    verts.push(Vec2::new(vals[0], vals[1]));
                }
                ConvexRegion::polygon(verts)
            }
            other => Err(bad(format!("unknown shape `{other}`"))),
        }
    }
}

fn parse_kv(s: &str, key: &str) -> std::result::Result<f64, String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected `{key}=<value>`"))?;
    if k != key {
        return Err(format!("expected key `{key}`, found `{k}`"));
    }
    v.parse::<f64>().map_err(|_| format!("bad float `{v}`"))
}

fn parse_floats(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated values, found {}", parts.len()));
    }
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| format!("bad float `{p}`")))
        .collect()
}
