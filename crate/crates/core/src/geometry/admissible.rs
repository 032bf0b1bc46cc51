use std::fmt;

use super::{segment_intersection, BBox, ConvexDomain, Point, PolygonalConfiguration, SegmentHit};

/// The first property an edge set fails.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// An endpoint lies outside the closed domain.
    OutsideDomain { edge: usize },
    /// A zero-length edge.
    Degenerate { edge: usize },
    /// (P1) two edges meet away from a shared endpoint.
    Crossing { edges: (usize, usize), at: Point },
    /// (P2) an interior vertex whose degree is not 2.
    InteriorDegree { vertex: Point, degree: usize },
    /// (P3) a boundary vertex whose degree is not 1.
    BoundaryDegree { vertex: Point, degree: usize },
    /// (P4) two edges on a common line.
    Colinear { edges: (usize, usize) },
}

impl Violation {
    pub fn property(&self) -> &'static str {
        match self {
            Violation::OutsideDomain { .. } | Violation::Degenerate { .. } => "domain",
            Violation::Crossing { .. } => "P1",
            Violation::InteriorDegree { .. } => "P2",
            Violation::BoundaryDegree { .. } => "P3",
            Violation::Colinear { .. } => "P4",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutsideDomain { edge } => write!(f, "edge {edge} leaves the domain"),
            Violation::Degenerate { edge } => write!(f, "edge {edge} has zero length"),
            Violation::Crossing { edges, at } => {
                write!(f, "P1: edges {} and {} intersect at ({}, {})", edges.0, edges.1, at.x, at.y)
            }
            Violation::InteriorDegree { vertex, degree } => {
                write!(f, "P2: interior vertex ({}, {}) has degree {degree}", vertex.x, vertex.y)
            }
            Violation::BoundaryDegree { vertex, degree } => {
                write!(f, "P3: boundary vertex ({}, {}) has degree {degree}", vertex.x, vertex.y)
            }
            Violation::Colinear { edges } => write!(f, "P4: edges {} and {} are colinear", edges.0, edges.1),
        }
    }
}

/// Checks (P1)-(P4) in order and reports the first failure.
pub fn check_admissible(config: &PolygonalConfiguration, domain: &ConvexDomain) -> Result<(), Violation> {
    let tol = domain.eps();
    let edges = &config.edges;

    for (i, e) in edges.iter().enumerate() {
        if e.length() <= tol {
            return Err(Violation::Degenerate { edge: i });
        }
        if domain.boundary_distance(e.a) < -tol || domain.boundary_distance(e.b) < -tol {
            return Err(Violation::OutsideDomain { edge: i });
        }
    }

    // P1: sweep in x over bounding boxes
    let boxes: Vec<BBox> = edges.iter().map(|e| e.bbox()).collect();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&i, &j| boxes[i].min.x.total_cmp(&boxes[j].min.x));
    for (oi, &i) in order.iter().enumerate() {
        for &j in &order[oi + 1..] {
            if boxes[j].min.x > boxes[i].max.x + tol {
                break;
            }
            if !boxes[i].overlaps(&boxes[j], tol) {
                continue;
            }
            let (ei, ej) = (&edges[i], &edges[j]);
            let pair = (i.min(j), i.max(j));
            match segment_intersection(ei.a, ei.b, ej.a, ej.b, tol) {
                SegmentHit::None => {}
                SegmentHit::Overlap => return Err(Violation::Crossing { edges: pair, at: ei.a }),
                SegmentHit::Point { p, .. } => {
                    let shared = [ei.a, ei.b].iter().any(|&x| x.dist(p) <= tol)
                        && [ej.a, ej.b].iter().any(|&x| x.dist(p) <= tol);
                    if !shared {
                        return Err(Violation::Crossing { edges: pair, at: p });
                    }
                }
            }
        }
    }

    // P2 and P3
    let verts = config.vertices(domain, tol);
    if let Some(v) = verts.iter().find(|v| !v.on_boundary && v.edges.len() != 2) {
        return Err(Violation::InteriorDegree { vertex: v.point, degree: v.edges.len() });
    }
    if let Some(v) = verts.iter().find(|v| v.on_boundary && v.edges.len() != 1) {
        return Err(Violation::BoundaryDegree { vertex: v.point, degree: v.edges.len() });
    }

    // P4: sort carrier lines by angle and compare neighbours, wrapping at pi
    let lines: Vec<_> = edges.iter().map(|e| e.line()).collect();
    let mut by_phi: Vec<usize> = (0..edges.len()).collect();
    by_phi.sort_by(|&i, &j| lines[i].phi.total_cmp(&lines[j].phi));
    let ang_tol = super::EPS_GEOM;
    let n = by_phi.len();
    for k in 0..n {
        let i = by_phi[k];
        for step in 1..n {
            let j = by_phi[(k + step) % n];
            let mut dphi = lines[j].phi - lines[i].phi;
            if k + step >= n {
                dphi += std::f64::consts::PI;
            }
            if dphi > ang_tol {
                break;
            }
            if lines[i].coincides(&lines[j], tol.max(ang_tol)) {
                return Err(Violation::Colinear { edges: (i.min(j), i.max(j)) });
            }
        }
    }
    Ok(())
}
