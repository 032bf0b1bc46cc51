//! Planar subdivision of a domain by segments, with face areas and parities.
//!
//! Segments are split at mutual crossings, the domain boundary is added as a
//! ring of straight or circular edges, and faces are traced on a half-edge
//! structure. Each input segment carries a bit mask; the parity of a face is
//! the XOR of the masks crossed on any path from the reference face, which is
//! the face touching the boundary just after boundary parameter 0.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use super::{
    check_admissible, point_in_polygon, segment_intersection, BBox, ConvexDomain, Point, PointIndex,
    PolygonalConfiguration, SegmentHit,
};
use crate::error::{Error, Result};

/// One piece of a face boundary cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPiece {
    Line {
        a: Point,
        b: Point,
    },
    /// Circular arc from `a` to `b`, counterclockwise iff `ccw`.
    Arc {
        a: Point,
        b: Point,
        center: Point,
        radius: f64,
        ccw: bool,
    },
}

impl BoundaryPiece {
    pub fn start(&self) -> Point {
        match *self {
            BoundaryPiece::Line { a, .. } | BoundaryPiece::Arc { a, .. } => a,
        }
    }

    pub fn end(&self) -> Point {
        match *self {
            BoundaryPiece::Line { b, .. } | BoundaryPiece::Arc { b, .. } => b,
        }
    }
}

/// A closed boundary cycle of a face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceCycle {
    pub pieces: Vec<BoundaryPiece>,
    /// Signed area; outer cycles are positive and holes negative.
    pub signed_area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub area: f64,
    /// Minimal number of segment crossings from the reference face.
    pub depth: usize,
    /// XOR of segment masks crossed from the reference face.
    pub parity: u8,
    /// Outer cycle first, then holes.
    pub cycles: Vec<FaceCycle>,
    pub touches_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    pub faces: Vec<Face>,
    /// Index of the reference face.
    pub reference: usize,
}

impl Arrangement {
    /// Builds the subdivision of `domain` by the masked segments. Crossings
    /// between segments are allowed; colinear overlaps are not.
    pub fn build(domain: &ConvexDomain, segments: &[(Point, Point, u8)]) -> Result<Arrangement> {
        Builder::new(domain).run(segments)
    }

    pub fn total_area(&self) -> f64 {
        self.faces.iter().map(|f| f.area).sum()
    }

    /// Total area of faces with the given parity.
    pub fn area_with_parity(&self, parity: u8) -> f64 {
        self.faces.iter().filter(|f| f.parity == parity).map(|f| f.area).sum()
    }
}

/// Faces of an admissible configuration, each edge carrying mask 1 so that
/// parity is nesting depth modulo two.
pub fn arrangement_faces(config: &PolygonalConfiguration, domain: &ConvexDomain) -> Result<Arrangement> {
    domain.validate()?;
    if let Err(v) = check_admissible(config, domain) {
        return Err(Error::Admissibility(v.to_string()));
    }
    let segs: Vec<_> = config.edges.iter().map(|e| (e.a, e.b, 1u8)).collect();
    Arrangement::build(domain, &segs)
}

/// Area of the region of odd crossing parity with respect to `segments`,
/// measured from the reference face.
pub fn parity_area(domain: &ConvexDomain, segments: &[(Point, Point)]) -> Result<f64> {
    if segments.is_empty() {
        return Ok(0.0);
    }
    let segs: Vec<_> = segments.iter().map(|&(a, b)| (a, b, 1u8)).collect();
    Ok(Arrangement::build(domain, &segs)?.area_with_parity(1))
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Straight,
    /// Boundary arc traversed counterclockwise from `u` to `v`.
    Arc,
    /// Straight boundary edge of a polygon domain.
    BoundaryStraight,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    u: usize,
    v: usize,
    kind: Kind,
    mask: u8,
}

impl Edge {
    fn is_boundary(&self) -> bool {
        !matches!(self.kind, Kind::Straight)
    }
}

struct Builder<'a> {
    domain: &'a ConvexDomain,
    eps: f64,
    index: PointIndex,
    edges: Vec<Edge>,
}

impl<'a> Builder<'a> {
    fn new(domain: &'a ConvexDomain) -> Self {
        let eps = domain.eps();
        Builder { domain, eps, index: PointIndex::new(eps), edges: Vec::new() }
    }

    fn pt(&self, id: usize) -> Point {
        self.index.points()[id]
    }

    fn run(mut self, segments: &[(Point, Point, u8)]) -> Result<Arrangement> {
        self.split_segments(segments)?;
        self.add_boundary();
        self.trace()
    }

    fn split_segments(&mut self, segments: &[(Point, Point, u8)]) -> Result<()> {
        let n = segments.len();
        let boxes: Vec<BBox> = segments.iter().map(|s| BBox::of_points([&s.0, &s.1])).collect();
        let mut cuts: Vec<Vec<(f64, Point)>> = segments.iter().map(|s| vec![(0.0, s.0), (1.0, s.1)]).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| boxes[i].min.x.total_cmp(&boxes[j].min.x));
        for (oi, &i) in order.iter().enumerate() {
            for &j in &order[oi + 1..] {
                if boxes[j].min.x > boxes[i].max.x + self.eps {
                    break;
                }
                if !boxes[i].overlaps(&boxes[j], self.eps) {
                    continue;
                }
                let (a1, b1, _) = segments[i];
                let (a2, b2, _) = segments[j];
                match segment_intersection(a1, b1, a2, b2, self.eps) {
                    SegmentHit::None => {}
                    SegmentHit::Point { p, s, t } => {
                        cuts[i].push((s, p));
                        cuts[j].push((t, p));
                    }
                    SegmentHit::Overlap => {
                        return Err(Error::Consistency(format!("segments {i} and {j} overlap")));
                    }
                }
            }
        }
        for (k, mut c) in cuts.into_iter().enumerate() {
            c.sort_by(|x, y| x.0.total_cmp(&y.0));
            let ids: Vec<usize> = c.iter().map(|&(_, p)| self.index.insert(p).0).collect();
            for w in ids.windows(2) {
                if w[0] != w[1] {
                    self.edges.push(Edge { u: w[0], v: w[1], kind: Kind::Straight, mask: segments[k].2 });
                }
            }
        }
        Ok(())
    }

    fn add_boundary(&mut self) {
        let d = self.domain;
        let anchors: Vec<Point> = match d {
            ConvexDomain::Disk { radius, .. } => {
                vec![d.boundary_point(0.0), d.boundary_point(std::f64::consts::PI * radius)]
            }
            ConvexDomain::Polygon(v) => v.clone(),
        };
        let mut on_bd: Vec<(f64, usize)> = Vec::new();
        for p in anchors {
            let id = self.index.insert(p).0;
            on_bd.push((d.boundary_param(self.pt(id)), id));
        }
        for id in 0..self.index.points().len() {
            let p = self.pt(id);
            if d.on_boundary(p, self.eps) {
                on_bd.push((d.boundary_param(p), id));
            }
        }
        // anchors first, so the anchor at parameter 0 keeps the smallest key
        let per = d.perimeter();
        for e in on_bd.iter_mut() {
            if e.0 > per - self.eps {
                e.0 = 0.0;
            }
        }
        on_bd.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut seen = std::collections::HashSet::new();
        on_bd.retain(|&(_, id)| seen.insert(id));
        let kind = match d {
            ConvexDomain::Disk { .. } => Kind::Arc,
            ConvexDomain::Polygon(_) => Kind::BoundaryStraight,
        };
        let m = on_bd.len();
        for k in 0..m {
            let u = on_bd[k].1;
            let v = on_bd[(k + 1) % m].1;
            self.edges.push(Edge { u, v, kind, mask: 0 });
        }
    }

    /// Outgoing tangent angle of half-edge `h`.
    fn out_angle(&self, h: usize) -> f64 {
        let e = self.edges[h / 2];
        let fwd = h.is_multiple_of(2);
        let (from, to) = if fwd { (e.u, e.v) } else { (e.v, e.u) };
        let (p, q) = (self.pt(from), self.pt(to));
        let dir = match (e.kind, self.domain) {
            (Kind::Arc, ConvexDomain::Disk { center, .. }) => {
                let t = (p - *center).perp();
                if fwd {
                    t
                } else {
                    -t
                }
            }
            _ => q - p,
        };
        dir.y.atan2(dir.x)
    }

    fn origin(&self, h: usize) -> usize {
        let e = self.edges[h / 2];
        if h.is_multiple_of(2) {
            e.u
        } else {
            e.v
        }
    }

    fn head(&self, h: usize) -> usize {
        self.origin(h ^ 1)
    }

    fn piece(&self, h: usize) -> BoundaryPiece {
        let e = self.edges[h / 2];
        let a = self.pt(self.origin(h));
        let b = self.pt(self.head(h));
        match (e.kind, self.domain) {
            (Kind::Arc, ConvexDomain::Disk { center, radius }) => {
                BoundaryPiece::Arc { a, b, center: *center, radius: *radius, ccw: h.is_multiple_of(2) }
            }
            _ => BoundaryPiece::Line { a, b },
        }
    }

    fn trace(self) -> Result<Arrangement> {
        let nv = self.index.points().len();
        let nh = 2 * self.edges.len();

        // angular order of outgoing half-edges
        let mut out: Vec<Vec<(f64, usize)>> = vec![Vec::new(); nv];
        for h in 0..nh {
            out[self.origin(h)].push((self.out_angle(h), h));
        }
        let mut slot = vec![0usize; nh];
        for list in out.iter_mut() {
            list.sort_by(|x, y| x.0.total_cmp(&y.0));
            for (k, &(_, h)) in list.iter().enumerate() {
                slot[h] = k;
            }
        }
        let next = |h: usize| -> usize {
            let t = h ^ 1;
            let v = self.origin(t);
            let list = &out[v];
            let k = (slot[t] + list.len() - 1) % list.len();
            list[k].1
        };

        // cycles
        let mut cycle_of = vec![usize::MAX; nh];
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        for start in 0..nh {
            if cycle_of[start] != usize::MAX {
                continue;
            }
            let id = cycles.len();
            let mut cyc = Vec::new();
            let mut h = start;
            loop {
                if cycle_of[h] != usize::MAX {
                    return Err(Error::Consistency("half-edge cycle is not closed".into()));
                }
                cycle_of[h] = id;
                cyc.push(h);
                h = next(h);
                if h == start {
                    break;
                }
                if cyc.len() > nh {
                    return Err(Error::Consistency("runaway face traversal".into()));
                }
            }
            cycles.push(cyc);
        }
        let pieces: Vec<Vec<BoundaryPiece>> =
            cycles.iter().map(|c| c.iter().map(|&h| self.piece(h)).collect()).collect();
        let areas: Vec<f64> = pieces.iter().map(|p| signed_area(p)).collect();

        // connected components over vertices
        let mut uf = UnionFind::new(nv);
        for e in &self.edges {
            uf.union(e.u, e.v);
        }
        let bd_edge = self.edges.iter().position(Edge::is_boundary).expect("boundary ring present");
        let bd_comp = uf.find(self.edges[bd_edge].u);
        let comp_of_cycle: Vec<usize> = cycles.iter().map(|c| uf.find(self.origin(c[0]))).collect();

        let exterior = (0..cycles.len())
            .filter(|&c| comp_of_cycle[c] == bd_comp)
            .min_by(|&a, &b| areas[a].total_cmp(&areas[b]))
            .expect("boundary component has cycles");

        let tiny = 1e-12 * self.domain.area().max(f64::MIN_POSITIVE);
        let mut face_of_cycle: Vec<Option<usize>> = vec![None; cycles.len()];
        let mut faces_cycles: Vec<Vec<usize>> = Vec::new();
        let mut holes: Vec<usize> = Vec::new();
        for c in 0..cycles.len() {
            if c == exterior {
                continue;
            }
            if areas[c] > tiny {
                face_of_cycle[c] = Some(faces_cycles.len());
                faces_cycles.push(vec![c]);
            } else if comp_of_cycle[c] == bd_comp {
                return Err(Error::Consistency("non-positive inner cycle in boundary component".into()));
            } else {
                holes.push(c);
            }
        }
        for &hc in &holes {
            let probe = pieces[hc][0].start();
            let mut best: Option<(f64, usize)> = None;
            for (f, fc) in faces_cycles.iter().enumerate() {
                let oc = fc[0];
                if comp_of_cycle[oc] == comp_of_cycle[hc] {
                    continue;
                }
                if best.is_some_and(|b| areas[oc] >= b.0) {
                    continue;
                }
                if cycle_contains(&pieces[oc], probe) {
                    best = Some((areas[oc], f));
                }
            }
            let Some((_, f)) = best else {
                return Err(Error::Consistency("hole without an enclosing face".into()));
            };
            face_of_cycle[hc] = Some(f);
            faces_cycles[f].push(hc);
        }

        // face adjacency and parity by breadth-first search
        let nf = faces_cycles.len();
        let face_of_half = |h: usize| face_of_cycle[cycle_of[h]];
        let mut adj: Vec<Vec<(usize, u8)>> = vec![Vec::new(); nf];
        let mut touches = vec![false; nf];
        for (k, e) in self.edges.iter().enumerate() {
            let f1 = face_of_half(2 * k);
            let f2 = face_of_half(2 * k + 1);
            if e.is_boundary() {
                for f in [f1, f2].into_iter().flatten() {
                    touches[f] = true;
                }
                continue;
            }
            if let (Some(a), Some(b)) = (f1, f2) {
                adj[a].push((b, e.mask));
                adj[b].push((a, e.mask));
            }
        }
        // reference: left of the counterclockwise boundary edge leaving parameter 0
        let ref_edge = self.edges.iter().position(|e| e.is_boundary()).expect("boundary ring present");
        let reference = face_of_half(2 * ref_edge)
            .ok_or_else(|| Error::Consistency("reference boundary edge has no face".into()))?;
        let mut depth = vec![usize::MAX; nf];
        let mut parity = vec![0u8; nf];
        depth[reference] = 0;
        let mut queue = VecDeque::from([reference]);
        while let Some(f) = queue.pop_front() {
            for &(g, mask) in &adj[f] {
                let p = parity[f] ^ mask;
                if depth[g] == usize::MAX {
                    depth[g] = depth[f] + 1;
                    parity[g] = p;
                    queue.push_back(g);
                } else if parity[g] != p {
                    return Err(Error::Consistency("face parity is not well defined".into()));
                }
            }
        }
        if depth.contains(&usize::MAX) {
            return Err(Error::Consistency("face adjacency graph is disconnected".into()));
        }

        let faces = faces_cycles
            .into_iter()
            .enumerate()
            .map(|(f, cs)| {
                let area = cs.iter().map(|&c| areas[c]).sum::<f64>();
                Face {
                    area,
                    depth: depth[f],
                    parity: parity[f],
                    cycles: cs
                        .iter()
                        .map(|&c| FaceCycle { pieces: pieces[c].clone(), signed_area: areas[c] })
                        .collect(),
                    touches_boundary: touches[f],
                }
            })
            .collect();
        Ok(Arrangement { faces, reference })
    }
}

/// Counterclockwise angle swept by an arc from `a` to `b` about `c`.
fn arc_sweep(a: Point, b: Point, c: Point, ccw: bool) -> f64 {
    let (a, b) = if ccw { (a, b) } else { (b, a) };
    let t0 = (a.y - c.y).atan2(a.x - c.x);
    let t1 = (b.y - c.y).atan2(b.x - c.x);
    let d = (t1 - t0).rem_euclid(TAU);
    if d == 0.0 {
        TAU
    } else {
        d
    }
}

fn signed_area(pieces: &[BoundaryPiece]) -> f64 {
    let mut s = 0.0;
    for p in pieces {
        s += 0.5 * p.start().cross(p.end());
        if let BoundaryPiece::Arc { a, b, center, radius, ccw } = *p {
            let d = arc_sweep(a, b, center, ccw);
            let seg = 0.5 * radius * radius * (d - d.sin());
            s += if ccw { seg } else { -seg };
        }
    }
    s
}

fn cycle_contains(pieces: &[BoundaryPiece], p: Point) -> bool {
    let poly: Vec<Point> = pieces.iter().map(|x| x.start()).collect();
    let mut inside = point_in_polygon(p, &poly);
    for x in pieces {
        if let BoundaryPiece::Arc { a, b, center, radius, ccw } = *x {
            if p.dist(center) >= radius {
                continue;
            }
            let d = arc_sweep(a, b, center, ccw);
            let start = if ccw { a } else { b };
            let t0 = (start.y - center.y).atan2(start.x - center.x);
            let mid = center + Point::unit(t0 + 0.5 * d) * radius;
            let chord = b - a;
            if chord.cross(p - a) * chord.cross(mid - a) > 0.0 {
                inside = !inside;
            }
        }
    }
    inside
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Segment;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn square_contour(x0: f64, y0: f64, side: f64) -> Vec<Segment> {
        let p = [
            Point::new(x0, y0),
            Point::new(x0 + side, y0),
            Point::new(x0 + side, y0 + side),
            Point::new(x0, y0 + side),
        ];
        (0..4).map(|i| Segment::new(p[i], p[(i + 1) % 4])).collect()
    }

    fn box03() -> ConvexDomain {
        ConvexDomain::rect(Point::new(0.0, 0.0), Point::new(3.0, 3.0)).unwrap()
    }

    #[test]
    fn empty_configuration_is_one_face() {
        for d in [box03(), ConvexDomain::disk(Point::new(1.0, 2.0), 0.7).unwrap()] {
            let a = arrangement_faces(&PolygonalConfiguration::empty(), &d).unwrap();
            assert_eq!(a.faces.len(), 1);
            assert_abs_diff_eq!(a.faces[0].area, d.area(), epsilon = 1e-12);
            assert_eq!(a.faces[0].depth, 0);
        }
    }

    #[test]
    fn unit_square_in_box_gives_areas_one_and_eight() {
        let cfg = PolygonalConfiguration::new(square_contour(1.0, 1.0, 1.0));
        let a = arrangement_faces(&cfg, &box03()).unwrap();
        let mut areas: Vec<f64> = a.faces.iter().map(|f| f.area).collect();
        areas.sort_by(f64::total_cmp);
        assert_eq!(areas.len(), 2);
        assert_abs_diff_eq!(areas[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(areas[1], 8.0, epsilon = 1e-12);
        let inner = a.faces.iter().find(|f| (f.area - 1.0).abs() < 1e-9).unwrap();
        assert_eq!(inner.parity, 1);
        assert!(!inner.touches_boundary);
    }

    #[test]
    fn nested_contours_have_depths_zero_one_two() {
        let mut edges = square_contour(0.5, 0.5, 2.0);
        edges.extend(square_contour(1.0, 1.0, 1.0));
        let a = arrangement_faces(&PolygonalConfiguration::new(edges), &box03()).unwrap();
        let mut by_depth: Vec<(usize, f64)> = a.faces.iter().map(|f| (f.depth, f.area)).collect();
        by_depth.sort_by_key(|x| x.0);
        assert_eq!(by_depth.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_abs_diff_eq!(by_depth[0].1, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(by_depth[1].1, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(by_depth[2].1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chords_split_a_disk() {
        let d = ConvexDomain::disk(Point::ORIGIN, 1.0).unwrap();
        // a wedge from an interior vertex to two boundary points
        let v = Point::new(0.1, 0.2);
        let e1 = Segment::new(v, Point::unit(0.3));
        let e2 = Segment::new(v, Point::unit(2.5));
        let a = arrangement_faces(&PolygonalConfiguration::new(vec![e1, e2]), &d).unwrap();
        assert_eq!(a.faces.len(), 2);
        assert_abs_diff_eq!(a.total_area(), PI, epsilon = 1e-12);
        // the wedge region: triangle fan plus circular segment between the two boundary points
        let p1 = Point::unit(0.3);
        let p2 = Point::unit(2.5);
        let tri = 0.5 * (p1 - v).cross(p2 - v);
        let sweep = 2.2;
        let seg = 0.5 * (sweep - f64::sin(sweep));
        let wedge = tri + seg;
        assert!(a.faces.iter().any(|f| (f.area - wedge).abs() < 1e-12));
    }

    #[test]
    fn crossing_segments_are_split_for_parity_area() {
        let d = box03();
        // two crossing chords of the box cut it into four quadrants
        let s = [(Point::new(0.0, 1.0), Point::new(3.0, 1.0)), (Point::new(2.0, 0.0), Point::new(2.0, 3.0))];
        let a = Arrangement::build(&d, &s.iter().map(|&(p, q)| (p, q, 1)).collect::<Vec<_>>()).unwrap();
        assert_eq!(a.faces.len(), 4);
        // the reference face holds corner (0,0); odd faces are the two off-diagonal quadrants
        let odd = parity_area(&d, &s).unwrap();
        assert_abs_diff_eq!(odd, 1.0 + 4.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_admissible_input() {
        let d = box03();
        let cfg = PolygonalConfiguration::new(vec![
            Segment::new(Point::new(0.5, 0.5), Point::new(2.5, 2.5)),
            Segment::new(Point::new(0.5, 2.5), Point::new(2.5, 0.5)),
        ]);
        assert!(matches!(arrangement_faces(&cfg, &d), Err(Error::Admissibility(_))));
    }
}
