//! Free contour measure: single closed contours, the self-avoiding walk
//! sampler and two independent mass estimators.

mod lines;
mod walk;

pub use lines::{enumerate_contours_from_lines, theta_mass_estimator, triangle_density_quadrature, MAX_LINES};
pub use walk::{
    contour_birth_sampler, poisson_contours, run_contour_walk, self_avoiding_lifetime, theta_walk_estimate,
    walk_birth_weight, KillReason, VertexRule, WalkOutcome, WalkProposal, DIRECTION_RATE, SPAWN_RATE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    point_in_polygon, segment_intersection, shoelace, BBox, ConvexDomain, Point, Segment, SegmentHit,
};
use crate::gibbs::phi_energy;

/// A closed simple polygon with no colinear neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Contour {
    vertices: Vec<Point>,
    length: f64,
    phi: f64,
    bbox: BBox,
}

impl Contour {
    /// Validates the polygon and, when a domain is given, that it lies inside
    /// without touching the boundary.
    pub fn new(vertices: Vec<Point>, domain: Option<&ConvexDomain>) -> Result<Contour> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Admissibility(format!("a contour needs 3 vertices, got {n}")));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::Parameter("non-finite contour vertex".into()));
        }
        let phi = phi_energy(&vertices).map_err(|e| Error::Admissibility(e.to_string()))?;
        let bbox = BBox::of_points(&vertices);
        let tol = 1e-12 * (bbox.width() + bbox.height()).max(1e-300);
        for i in 0..n {
            let (a1, b1) = (vertices[i], vertices[(i + 1) % n]);
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a2, b2) = (vertices[j], vertices[(j + 1) % n]);
                match segment_intersection(a1, b1, a2, b2, tol) {
                    SegmentHit::None => {}
                    SegmentHit::Overlap => return Err(Error::Admissibility(format!("edges {i} and {j} overlap"))),
                    SegmentHit::Point { p, .. } => {
                        let shared = if j == i + 1 { b1 } else { a1 };
                        if !adjacent || p.dist(shared) > tol {
                            return Err(Error::Admissibility(format!("edges {i} and {j} meet")));
                        }
                    }
                }
            }
        }
        if let Some(d) = domain {
            let eps = d.eps();
            if let Some(k) = vertices.iter().position(|&p| d.boundary_distance(p) <= eps) {
                return Err(Error::Admissibility(format!("vertex {k} is outside or on the boundary")));
            }
        }
        let length = (0..n).map(|i| vertices[i].dist(vertices[(i + 1) % n])).sum();
        Ok(Contour { vertices, length, phi, bbox })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn bbox(&self) -> &BBox {
        &self.bbox
    }

    /// Enclosed area.
    pub fn area(&self) -> f64 {
        shoelace(&self.vertices).abs()
    }

    /// Index of the vertex with the smallest abscissa.
    pub fn leftmost(&self) -> usize {
        (0..self.vertices.len()).min_by(|&i, &j| self.vertices[i].x.total_cmp(&self.vertices[j].x)).unwrap()
    }

    /// Whether `p` lies in the region bounded by the contour.
    pub fn encloses(&self, p: Point) -> bool {
        point_in_polygon(p, &self.vertices)
    }

    /// Whether the two curves share a point. Touching counts.
    pub fn intersects(&self, other: &Contour) -> bool {
        if !self.bbox.overlaps(&other.bbox, 1e-12) {
            return false;
        }
        for (a1, b1) in self.edges() {
            let eb = BBox::of_points(&[a1, b1]);
            if !eb.overlaps(&other.bbox, 1e-12) {
                continue;
            }
            for (a2, b2) in other.edges() {
                if !matches!(segment_intersection(a1, b1, a2, b2, 1e-12), SegmentHit::None) {
                    return true;
                }
            }
        }
        false
    }

    /// Whether the curve meets a convex region: an edge enters it or the
    /// region lies inside the contour's boundary line.
    pub fn meets(&self, region: &ConvexDomain) -> bool {
        if !self.bbox.overlaps(&region.bbox(), 0.0) {
            return false;
        }
        self.edges().any(|(a, b)| {
            if region.contains(a) || region.contains(b) {
                return true;
            }
            let d = b - a;
            match region.chord(a, d) {
                Some((lo, hi)) => hi > 0.0 && lo < 1.0 && hi > lo,
                None => false,
            }
        })
    }

    /// Length of the curve inside a convex region.
    pub fn length_in(&self, region: &ConvexDomain) -> f64 {
        self.edges()
            .map(|(a, b)| match region.chord(a, b - a) {
                Some((lo, hi)) => (hi.min(1.0) - lo.max(0.0)).max(0.0) * a.dist(b),
                None => 0.0,
            })
            .sum()
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.edges().map(|(a, b)| Segment::new(a, b)).collect()
    }
}

impl TryFrom<Vec<Point>> for Contour {
    type Error = Error;

    fn try_from(v: Vec<Point>) -> Result<Contour> {
        Contour::new(v, None)
    }
}

impl From<Contour> for Vec<Point> {
    fn from(c: Contour) -> Vec<Point> {
        c.vertices
    }
}

/// Whether a family of contours is pairwise disjoint.
pub fn pairwise_disjoint(contours: &[Contour]) -> bool {
    for (i, c) in contours.iter().enumerate() {
        if contours[i + 1..].iter().any(|d| c.intersects(d)) {
            return false;
        }
    }
    true
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MassEstimate {
    pub estimate: f64,
    pub se: f64,
    pub samples: u64,
}

impl MassEstimate {
    /// Scaled sample mean of the weights.
    pub fn from_weights(scale: f64, sum: f64, sum_sq: f64, n: u64) -> MassEstimate {
        if n == 0 {
            return MassEstimate::default();
        }
        let nf = n as f64;
        let m = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * m * m) / (nf - 1.0)).max(0.0) } else { 0.0 };
        MassEstimate { estimate: scale * m, se: scale * (var / nf).sqrt(), samples: n }
    }

    /// Sum of independent estimates.
    pub fn combine(self, o: MassEstimate) -> MassEstimate {
        MassEstimate {
            estimate: self.estimate + o.estimate,
            se: self.se.hypot(o.se),
            samples: self.samples + o.samples,
        }
    }

    /// Standardized difference between two independent estimates.
    pub fn z_against(&self, o: &MassEstimate) -> f64 {
        (self.estimate - o.estimate) / self.se.hypot(o.se)
    }
}

/// Upper bound on the total tilted mass in a convex domain.
pub fn total_mass_bound(domain: &ConvexDomain, beta: f64) -> f64 {
    (domain.perimeter() * (beta.abs() * domain.diameter()).exp()).exp()
}
