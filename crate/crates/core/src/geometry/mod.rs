//! Planar primitives, convex domains and the motion-invariant line measure.
//!
//! Lines use the `(phi, rho)` chart: the line is `{p : p.x sin(phi) + p.y cos(phi) = rho}`,
//! so `(rho sin phi, rho cos phi)` is its foot point and `(cos phi, -sin phi)` its
//! direction. The invariant measure on lines is `dphi drho` on `[0, pi) x R`.

mod admissible;
mod arrangement;

pub use admissible::{check_admissible, Violation};
pub use arrangement::{arrangement_faces, parity_area, Arrangement, BoundaryPiece, Face, FaceCycle};

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

#[cfg(test)]
use crate::error::Error;
use crate::error::{param, Result};

/// Relative tolerance for incidence and colinearity tests, scaled by the
/// domain diameter.
pub const EPS_GEOM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from(a: [f64; 2]) -> Self {
        Point { x: a[0], y: a[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn unit(angle: f64) -> Point {
        Point::new(angle.cos(), angle.sin())
    }

    #[inline]
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    pub fn rotated(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Point, s: f64) -> Point {
        Point::new(self.x + s * (o.x - self.x), self.y + s * (o.y - self.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn of_points<'a>(pts: impl IntoIterator<Item = &'a Point>) -> BBox {
        let mut b = BBox {
            min: Point::new(f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for p in pts {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        b
    }

    #[inline]
    pub fn overlaps(&self, o: &BBox, slack: f64) -> bool {
        self.min.x <= o.max.x + slack
            && o.min.x <= self.max.x + slack
            && self.min.y <= o.max.y + slack
            && o.min.y <= self.max.y + slack
    }

    pub fn inflate(&self, r: f64) -> BBox {
        BBox { min: Point::new(self.min.x - r, self.min.y - r), max: Point::new(self.max.x + r, self.max.y + r) }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// A straight line in the `(phi, rho)` chart with `phi` in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub phi: f64,
    pub rho: f64,
}

impl Line {
    pub fn from_params(phi: f64, rho: f64) -> Result<Line> {
        if !(0.0..PI).contains(&phi) || !rho.is_finite() {
            return param(format!("line parameters out of range: phi={phi}, rho={rho}"));
        }
        Ok(Line { phi, rho })
    }

    /// Line through `p` with direction `dir` (need not be normalized).
    pub fn through(p: Point, dir: Point) -> Line {
        // direction (cos phi, -sin phi) up to sign
        let mut phi = (-dir.y).atan2(dir.x);
        if phi < 0.0 {
            phi += PI;
        }
        if phi >= PI {
            phi -= PI;
        }
        let n = Point::new(phi.sin(), phi.cos());
        Line { phi, rho: p.dot(n) }
    }

    pub fn through_points(a: Point, b: Point) -> Line {
        Line::through(a, b - a)
    }

    #[inline]
    pub fn normal(&self) -> Point {
        Point::new(self.phi.sin(), self.phi.cos())
    }

    #[inline]
    pub fn direction(&self) -> Point {
        Point::new(self.phi.cos(), -self.phi.sin())
    }

    /// Foot of the perpendicular from the origin.
    pub fn foot(&self) -> Point {
        self.normal() * self.rho
    }

    #[inline]
    pub fn signed_distance(&self, p: Point) -> f64 {
        p.dot(self.normal()) - self.rho
    }

    /// Slope `dy/dx`; infinite for vertical lines.
    pub fn slope(&self) -> f64 {
        -self.phi.tan()
    }

    pub fn intersection(&self, o: &Line) -> Option<Point> {
        let n1 = self.normal();
        let n2 = o.normal();
        let det = n1.cross(n2);
        if det.abs() < 1e-15 {
            return None;
        }
        Some(Point::new((self.rho * n2.y - o.rho * n1.y) / det, (n1.x * o.rho - n2.x * self.rho) / det))
    }

    /// Whether two lines coincide within `tol` (angle in radians and offset in
    /// length units), handling the wrap of `phi` at `pi`.
    pub fn coincides(&self, o: &Line, tol: f64) -> bool {
        let n1 = self.normal();
        let mut n2 = o.normal();
        let mut r2 = o.rho;
        if n1.dot(n2) < 0.0 {
            n2 = -n2;
            r2 = -r2;
        }
        n1.cross(n2).abs() < tol && (self.rho - r2).abs() < tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier: Option<Line>,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Segment {
        Segment { a, b, carrier: None }
    }

    pub fn with_carrier(a: Point, b: Point, carrier: Line) -> Segment {
        Segment { a, b, carrier: Some(carrier) }
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn line(&self) -> Line {
        self.carrier.unwrap_or_else(|| Line::through_points(self.a, self.b))
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points([&self.a, &self.b])
    }

    pub fn midpoint(&self) -> Point {
        self.a.lerp(self.b, 0.5)
    }
}

/// Result of intersecting two closed segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentHit {
    None,
    /// Single common point with the parameters along each segment.
    Point {
        p: Point,
        s: f64,
        t: f64,
    },
    /// The segments are colinear and overlap in more than a point.
    Overlap,
}

/// Intersection of closed segments `[a1,b1]` and `[a2,b2]`; `tol` is an
/// absolute length tolerance for touching.
pub fn segment_intersection(a1: Point, b1: Point, a2: Point, b2: Point, tol: f64) -> SegmentHit {
    let d1 = b1 - a1;
    let d2 = b2 - a2;
    let denom = d1.cross(d2);
    let w = a2 - a1;
    let l1 = d1.norm();
    let l2 = d2.norm();
    if denom.abs() <= 1e-14 * l1 * l2 {
        // parallel
        if w.cross(d1).abs() > tol * l1 {
            return SegmentHit::None;
        }
        let t0 = w.dot(d1) / (l1 * l1);
        let t1 = (b2 - a1).dot(d1) / (l1 * l1);
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        let lo = lo.max(0.0);
        let hi = hi.min(1.0);
        let slack = tol / l1;
        if hi < lo - slack {
            return SegmentHit::None;
        }
        if (hi - lo) * l1 <= tol {
            let s = 0.5 * (lo + hi);
            let p = a1 + d1 * s;
            let t = ((p - a2).dot(d2) / (l2 * l2)).clamp(0.0, 1.0);
            return SegmentHit::Point { p, s, t };
        }
        return SegmentHit::Overlap;
    }
    let s = w.cross(d2) / denom;
    let t = w.cross(d1) / denom;
    let ss = tol / l1;
    let ts = tol / l2;
    if s < -ss || s > 1.0 + ss || t < -ts || t > 1.0 + ts {
        return SegmentHit::None;
    }
    let s = s.clamp(0.0, 1.0);
    let t = t.clamp(0.0, 1.0);
    SegmentHit::Point { p: a1 + d1 * s, s, t }
}

/// Whether closed segments touch or cross.
pub fn segments_meet(a1: Point, b1: Point, a2: Point, b2: Point) -> bool {
    !matches!(segment_intersection(a1, b1, a2, b2, 0.0), SegmentHit::None)
}

/// Bounded open convex domain: a disk or a strictly convex polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvexDomain {
    Disk {
        center: Point,
        radius: f64,
    },
    /// Counterclockwise vertex list.
    Polygon(Vec<Point>),
}

impl ConvexDomain {
    pub fn disk(center: Point, radius: f64) -> Result<ConvexDomain> {
        let d = ConvexDomain::Disk { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<ConvexDomain> {
        let d = ConvexDomain::Polygon(vertices);
        d.validate()?;
        Ok(d)
    }

    /// The open square `(-half, half)^2`.
    pub fn square(half: f64) -> Result<ConvexDomain> {
        ConvexDomain::rect(Point::new(-half, -half), Point::new(half, half))
    }

    pub fn rect(min: Point, max: Point) -> Result<ConvexDomain> {
        if !(max.x > min.x && max.y > min.y) {
            return param(format!("rectangle corners out of order: {min:?}, {max:?}"));
        }
        ConvexDomain::polygon(vec![min, Point::new(max.x, min.y), max, Point::new(min.x, max.y)])
    }

    /// Checks the nonempty-interior and strict-convexity invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexDomain::Disk { center, radius } => {
                if !center.is_finite() || !radius.is_finite() || *radius <= 0.0 {
                    return param(format!("disk needs a positive finite radius, got {radius}"));
                }
            }
            ConvexDomain::Polygon(v) => {
                if v.len() < 3 {
                    return param("polygon domain needs at least three vertices");
                }
                if v.iter().any(|p| !p.is_finite()) {
                    return param("polygon vertex is not finite");
                }
                let n = v.len();
                let scale = BBox::of_points(v.iter()).width().max(BBox::of_points(v.iter()).height());
                for i in 0..n {
                    let a = v[i];
                    let b = v[(i + 1) % n];
                    let c = v[(i + 2) % n];
                    if (b - a).cross(c - b) <= 1e-12 * scale * scale {
                        return param("polygon domain must be strictly convex and counterclockwise");
                    }
                }
                // a strictly convex turn sequence can still wind twice
                let winding: f64 = (0..n)
                    .map(|i| {
                        let d0 = v[(i + 1) % n] - v[i];
                        let d1 = v[(i + 2) % n] - v[(i + 1) % n];
                        d0.cross(d1).atan2(d0.dot(d1))
                    })
                    .sum();
                if (winding - TAU).abs() > 1e-6 {
                    return param("polygon domain winds more than once");
                }
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        match self {
            ConvexDomain::Disk { radius, .. } => PI * radius * radius,
            ConvexDomain::Polygon(v) => shoelace(v),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            ConvexDomain::Disk { radius, .. } => TAU * radius,
            ConvexDomain::Polygon(v) => {
                let n = v.len();
                (0..n).map(|i| v[i].dist(v[(i + 1) % n])).sum()
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            ConvexDomain::Disk { radius, .. } => 2.0 * radius,
            ConvexDomain::Polygon(v) => {
                let mut d: f64 = 0.0;
                for i in 0..v.len() {
                    for j in i + 1..v.len() {
                        d = d.max(v[i].dist(v[j]));
                    }
                }
                d
            }
        }
    }

    /// Absolute geometric tolerance for this domain.
    pub fn eps(&self) -> f64 {
        EPS_GEOM * self.diameter().max(f64::MIN_POSITIVE)
    }

    /// A reference interior point: the disk centre or the vertex centroid.
    pub fn center(&self) -> Point {
        match self {
            ConvexDomain::Disk { center, .. } => *center,
            ConvexDomain::Polygon(v) => {
                let s = v.iter().fold(Point::ORIGIN, |acc, p| acc + *p);
                s * (1.0 / v.len() as f64)
            }
        }
    }

    /// Radius of a disk about [`center`](Self::center) containing the domain.
    pub fn circumradius(&self) -> f64 {
        match self {
            ConvexDomain::Disk { radius, .. } => *radius,
            ConvexDomain::Polygon(v) => {
                let c = self.center();
                v.iter().map(|p| p.dist(c)).fold(0.0, f64::max)
            }
        }
    }

    pub fn bbox(&self) -> BBox {
        match self {
            ConvexDomain::Disk { center, radius } => BBox {
                min: Point::new(center.x - radius, center.y - radius),
                max: Point::new(center.x + radius, center.y + radius),
            },
            ConvexDomain::Polygon(v) => BBox::of_points(v.iter()),
        }
    }

    /// Support function `max_{p in D} p . n` for a unit vector `n`.
    pub fn support(&self, n: Point) -> f64 {
        match self {
            ConvexDomain::Disk { center, radius } => center.dot(n) + radius,
            ConvexDomain::Polygon(v) => v.iter().map(|p| p.dot(n)).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Width of the domain orthogonal to the unit normal `n`.
    pub fn width(&self, n: Point) -> f64 {
        self.support(n) + self.support(-n)
    }

    /// Signed distance to the boundary, positive inside.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match self {
            ConvexDomain::Disk { center, radius } => radius - p.dist(*center),
            ConvexDomain::Polygon(v) => {
                let n = v.len();
                let mut inside = f64::INFINITY;
                let mut outside: f64 = 0.0;
                let mut is_out = false;
                for i in 0..n {
                    let a = v[i];
                    let b = v[(i + 1) % n];
                    let e = b - a;
                    let h = e.cross(p - a) / e.norm();
                    inside = inside.min(h);
                    if h < 0.0 {
                        is_out = true;
                        let s = ((p - a).dot(e) / e.dot(e)).clamp(0.0, 1.0);
                        let d = p.dist(a + e * s);
                        outside = if outside == 0.0 { d } else { outside.min(d) };
                    }
                }
                if is_out {
                    -outside
                } else {
                    inside
                }
            }
        }
    }

    /// Point strictly inside the open domain.
    pub fn contains(&self, p: Point) -> bool {
        self.boundary_distance(p) > 0.0
    }

    pub fn on_boundary(&self, p: Point, tol: f64) -> bool {
        self.boundary_distance(p).abs() <= tol
    }

    /// Parameter interval `[s_in, s_out]` for which `origin + s * dir` lies in the
    /// closed domain, or `None` if the line misses it.
    pub fn chord(&self, origin: Point, dir: Point) -> Option<(f64, f64)> {
        match self {
            ConvexDomain::Disk { center, radius } => {
                let w = origin - *center;
                let a = dir.dot(dir);
                let b = w.dot(dir);
                let c = w.dot(w) - radius * radius;
                let disc = b * b - a * c;
                if disc <= 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                // stable roots
                let q = if b >= 0.0 { -(b + sq) } else { -b + sq };
                let (r1, r2) = (q / a, c / q);
                Some(if r1 < r2 { (r1, r2) } else { (r2, r1) })
            }
            ConvexDomain::Polygon(v) => {
                let n = v.len();
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for i in 0..n {
                    let a = v[i];
                    let e = v[(i + 1) % n] - a;
                    // inside half-plane: e x (p - a) >= 0
                    let num = e.cross(origin - a);
                    let den = e.cross(dir);
                    if den.abs() < 1e-300 {
                        if num < 0.0 {
                            return None;
                        }
                        continue;
                    }
                    let s = -num / den;
                    if den > 0.0 {
                        lo = lo.max(s);
                    } else {
                        hi = hi.min(s);
                    }
                }
                if lo < hi {
                    Some((lo, hi))
                } else {
                    None
                }
            }
        }
    }

    /// Chord of a line through the domain as a pair of boundary points ordered
    /// along the line's direction.
    pub fn clip_line(&self, line: &Line) -> Option<(Point, Point)> {
        let o = line.foot();
        let d = line.direction();
        self.chord(o, d).map(|(a, b)| (o + d * a, o + d * b))
    }

    /// Arc-length coordinate of a boundary point, measured counterclockwise
    /// from the reference point (angle 0 on a disk, vertex 0 on a polygon).
    pub fn boundary_param(&self, p: Point) -> f64 {
        match self {
            ConvexDomain::Disk { center, radius } => {
                let mut a = (p.y - center.y).atan2(p.x - center.x);
                if a < 0.0 {
                    a += TAU;
                }
                if a >= TAU {
                    a -= TAU;
                }
                a * radius
            }
            ConvexDomain::Polygon(v) => {
                let n = v.len();
                let mut best = (f64::INFINITY, 0.0);
                let mut acc = 0.0;
                for i in 0..n {
                    let a = v[i];
                    let e = v[(i + 1) % n] - a;
                    let len = e.norm();
                    let s = ((p - a).dot(e) / (len * len)).clamp(0.0, 1.0);
                    let d = p.dist(a + e * s);
                    if d < best.0 {
                        best = (d, acc + s * len);
                    }
                    acc += len;
                }
                let per = acc;
                if best.1 >= per {
                    best.1 - per
                } else {
                    best.1
                }
            }
        }
    }

    pub fn boundary_point(&self, param: f64) -> Point {
        match self {
            ConvexDomain::Disk { center, radius } => *center + Point::unit(param / radius) * *radius,
            ConvexDomain::Polygon(v) => {
                let n = v.len();
                let per = self.perimeter();
                let mut rem = param.rem_euclid(per);
                for i in 0..n {
                    let a = v[i];
                    let b = v[(i + 1) % n];
                    let len = a.dist(b);
                    if rem <= len {
                        return a.lerp(b, rem / len);
                    }
                    rem -= len;
                }
                v[0]
            }
        }
    }

    /// Uniform point in the domain by rejection from the bounding box.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let b = self.bbox();
        loop {
            let p = Point::new(b.min.x + rng.random::<f64>() * b.width(), b.min.y + rng.random::<f64>() * b.height());
            if self.contains(p) {
                return p;
            }
        }
    }

    /// Line drawn from the invariant measure restricted to lines hitting the
    /// domain, normalized to a probability. Lines within `1e-9` rad of vertical
    /// are redrawn (they have measure zero and no finite slope).
    pub fn sample_hitting_line<R: Rng + ?Sized>(&self, rng: &mut R) -> Line {
        let c = self.center();
        let r = self.circumradius();
        loop {
            let phi = rng.random::<f64>() * PI;
            if (phi - 0.5 * PI).abs() < 1e-9 {
                continue;
            }
            let n = Point::new(phi.sin(), phi.cos());
            let rho = c.dot(n) - r + 2.0 * r * rng.random::<f64>();
            let hi = self.support(n);
            let lo = -self.support(-n);
            if rho > lo && rho < hi {
                return Line { phi, rho };
            }
        }
    }

    /// The domain grown by `r`, approximated by its bounding rectangle for
    /// polygons and by a concentric disk for disks.
    pub fn dilated_box(&self, r: f64) -> ConvexDomain {
        match self {
            ConvexDomain::Disk { center, radius } => ConvexDomain::Disk { center: *center, radius: radius + r },
            ConvexDomain::Polygon(_) => {
                let b = self.bbox().inflate(r);
                ConvexDomain::Polygon(vec![b.min, Point::new(b.max.x, b.min.y), b.max, Point::new(b.min.x, b.max.y)])
            }
        }
    }

    /// Whether the whole segment lies strictly inside (convexity makes the
    /// endpoint test sufficient).
    pub fn contains_segment(&self, a: Point, b: Point) -> bool {
        self.contains(a) && self.contains(b)
    }
}

/// Invariant-measure mass of the lines hitting a convex domain, which by
/// Cauchy's formula equals the perimeter. A zero-radius disk has mass zero.
pub fn mu_mass_hitting(domain: &ConvexDomain) -> Result<f64> {
    if let ConvexDomain::Disk { center, radius } = domain {
        if center.is_finite() && *radius == 0.0 {
            return Ok(0.0);
        }
    }
    domain.validate()?;
    Ok(domain.perimeter())
}

pub fn line_from_params(phi: f64, rho: f64) -> Result<Line> {
    Line::from_params(phi, rho)
}

/// Signed (counterclockwise positive) area of a closed polygon.
pub fn shoelace(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>()
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Point, v: &[Point]) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// A finite set of edges, the carrier of polygonal Markov field realisations.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolygonalConfiguration {
    pub edges: Vec<Segment>,
}

/// A vertex of a configuration with the incident edge indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: Point,
    pub edges: Vec<usize>,
    pub on_boundary: bool,
}

impl PolygonalConfiguration {
    pub fn new(edges: Vec<Segment>) -> Self {
        PolygonalConfiguration { edges }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(Segment::length).sum()
    }

    /// Endpoints merged within `tol`, with degrees.
    pub fn vertices(&self, domain: &ConvexDomain, tol: f64) -> Vec<Vertex> {
        let mut index = PointIndex::new(tol);
        let mut out: Vec<Vertex> = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            for p in [e.a, e.b] {
                let (id, fresh) = index.insert(p);
                if fresh {
                    out.push(Vertex { point: p, edges: vec![], on_boundary: domain.on_boundary(p, tol) });
                }
                out[id].edges.push(i);
            }
        }
        out
    }

    /// Whether some vertex lies on the domain boundary.
    pub fn touches_boundary(&self, domain: &ConvexDomain) -> bool {
        let tol = domain.eps();
        self.edges.iter().any(|e| domain.boundary_distance(e.a) <= tol || domain.boundary_distance(e.b) <= tol)
    }

    /// Counts of interior vertices that are extreme in the four axis
    /// directions: `[left, right, up, down]`. A vertex is left-extreme when
    /// both incident edges leave it towards larger `x`.
    pub fn extreme_vertex_counts(&self, domain: &ConvexDomain) -> [usize; 4] {
        let tol = domain.eps();
        let mut counts = [0usize; 4];
        for v in self.vertices(domain, tol) {
            if v.on_boundary || v.edges.len() != 2 {
                continue;
            }
            let others: Vec<Point> = v
                .edges
                .iter()
                .map(|&i| {
                    let e = &self.edges[i];
                    if e.a.dist(v.point) <= tol {
                        e.b
                    } else {
                        e.a
                    }
                })
                .collect();
            let (o1, o2) = (others[0] - v.point, others[1] - v.point);
            if o1.x > 0.0 && o2.x > 0.0 {
                counts[0] += 1;
            }
            if o1.x < 0.0 && o2.x < 0.0 {
                counts[1] += 1;
            }
            if o1.y < 0.0 && o2.y < 0.0 {
                counts[2] += 1;
            }
            if o1.y > 0.0 && o2.y > 0.0 {
                counts[3] += 1;
            }
        }
        counts
    }

    pub fn interior_vertex_count(&self, domain: &ConvexDomain) -> usize {
        let tol = domain.eps();
        self.vertices(domain, tol).iter().filter(|v| !v.on_boundary).count()
    }

    pub fn boundary_vertex_count(&self, domain: &ConvexDomain) -> usize {
        let tol = domain.eps();
        self.vertices(domain, tol).iter().filter(|v| v.on_boundary).count()
    }
}

/// Spatial hash for merging nearly coincident points.
#[derive(Debug)]
pub(crate) struct PointIndex {
    tol: f64,
    cell: f64,
    grid: std::collections::HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Point>,
}

impl PointIndex {
    pub fn new(tol: f64) -> Self {
        let tol = tol.max(1e-300);
        PointIndex { tol, cell: 4.0 * tol, grid: Default::default(), points: vec![] }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    pub fn find(&self, p: Point) -> Option<usize> {
        let (kx, ky) = self.key(p);
        let mut best: Option<(f64, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.grid.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        let d = self.points[id].dist(p);
                        if d <= self.tol && best.is_none_or(|b| d < b.0) {
                            best = Some((d, id));
                        }
                    }
                }
            }
        }
        best.map(|b| b.1)
    }

    /// Returns the id of the merged point and whether it is new.
    pub fn insert(&mut self, p: Point) -> (usize, bool) {
        if let Some(id) = self.find(p) {
            return (id, false);
        }
        let id = self.points.len();
        self.points.push(p);
        let k = self.key(p);
        self.grid.entry(k).or_default().push(id);
        (id, true)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn line_params_place_foot_and_direction() {
        let l = line_from_params(0.0, 0.0).unwrap();
        assert_abs_diff_eq!(l.signed_distance(Point::new(5.0, 0.0)), 0.0);
        assert_abs_diff_eq!(l.direction().x, 1.0);

        let l = line_from_params(PI / 2.0, 2.0).unwrap();
        assert_abs_diff_eq!(l.foot().x, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.signed_distance(Point::new(2.0, -7.0)), 0.0, epsilon = 1e-12);

        let l = line_from_params(PI / 4.0, 1.0).unwrap();
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!(l.foot().x, h, epsilon = 1e-15);
        assert_abs_diff_eq!(l.foot().y, h, epsilon = 1e-15);
        assert_abs_diff_eq!(l.direction().x, h, epsilon = 1e-15);
        assert_abs_diff_eq!(l.direction().y, -h, epsilon = 1e-15);
    }

    #[test]
    fn line_params_reject_out_of_range_angle() {
        assert!(matches!(line_from_params(PI, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(line_from_params(-0.1, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn line_through_points_round_trips() {
        let a = Point::new(0.3, -1.2);
        let b = Point::new(-2.0, 4.0);
        let l = Line::through_points(a, b);
        assert!((0.0..PI).contains(&l.phi));
        assert_abs_diff_eq!(l.signed_distance(a), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.signed_distance(b), 0.0, epsilon = 1e-12);
        assert!(l.coincides(&Line::through_points(b, a), 1e-12));
    }

    #[test]
    fn hitting_mass_of_standard_bodies() {
        let disk = ConvexDomain::disk(Point::ORIGIN, 1.0).unwrap();
        assert_abs_diff_eq!(mu_mass_hitting(&disk).unwrap(), TAU, epsilon = 1e-12);
        let sq = ConvexDomain::square(1.0).unwrap();
        assert_abs_diff_eq!(mu_mass_hitting(&sq).unwrap(), 8.0, epsilon = 1e-12);
        let point = ConvexDomain::Disk { center: Point::ORIGIN, radius: 0.0 };
        assert_eq!(mu_mass_hitting(&point).unwrap(), 0.0);
        let bad = ConvexDomain::Disk { center: Point::ORIGIN, radius: -1.0 };
        assert!(mu_mass_hitting(&bad).is_err());
        let flat = ConvexDomain::Polygon(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)]);
        assert!(mu_mass_hitting(&flat).is_err());
    }

    #[test]
    fn polygon_validation_rejects_clockwise() {
        let cw = vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0), Point::new(1.0, 0.0)];
        assert!(ConvexDomain::polygon(cw).is_err());
    }

    #[test]
    fn chord_and_boundary_param_agree() {
        for d in [ConvexDomain::disk(Point::new(0.5, -0.2), 1.3).unwrap(), ConvexDomain::square(1.0).unwrap()] {
            let p = d.center();
            for k in 0..12 {
                let dir = Point::unit(k as f64 * 0.5 + 0.1);
                let (a, b) = d.chord(p, dir).unwrap();
                assert!(a < 0.0 && b > 0.0);
                let q = p + dir * b;
                assert!(d.on_boundary(q, 1e-12));
                let s = d.boundary_param(q);
                assert!(d.boundary_point(s).dist(q) < 1e-9);
            }
        }
    }

    #[test]
    fn segment_intersection_cases() {
        let o = Point::ORIGIN;
        let hit = segment_intersection(o, Point::new(2.0, 0.0), Point::new(1.0, -1.0), Point::new(1.0, 1.0), 0.0);
        match hit {
            SegmentHit::Point { p, s, t } => {
                assert_abs_diff_eq!(p.x, 1.0);
                assert_abs_diff_eq!(s, 0.5);
                assert_abs_diff_eq!(t, 0.5);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            segment_intersection(o, Point::new(1.0, 0.0), Point::new(2.0, 0.0), Point::new(3.0, 0.0), 0.0),
            SegmentHit::None
        );
        assert_eq!(
            segment_intersection(o, Point::new(2.0, 0.0), Point::new(1.0, 0.0), Point::new(3.0, 0.0), 0.0),
            SegmentHit::Overlap
        );
    }
}
