//! Single-site updates of an evolution log and the disagreement loops they cause.
//!
//! Inserting or removing one birth site while every other particle keeps its
//! recorded randomness changes the traced configuration along a single curve:
//! a closed loop, or a path chopped by the boundary. The curve is recovered
//! here by classifying the symmetric difference of the two configurations,
//! line by line.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::arak::{evolve, EvolutionLog, SiteDraw};
use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, Line, Point, PointIndex, PolygonalConfiguration, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureKind {
    /// The configurations agree.
    Empty,
    Closed,
    /// A path whose two ends lie on the domain boundary.
    Chopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementLoop {
    /// Segments present only in the new configuration.
    pub positive: Vec<Segment>,
    /// Segments present only in the old configuration.
    pub negative: Vec<Segment>,
    pub kind: ClosureKind,
}

impl DisagreementLoop {
    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    pub fn positive_length(&self) -> f64 {
        self.positive.iter().map(Segment::length).sum()
    }

    pub fn negative_length(&self) -> f64 {
        self.negative.iter().map(Segment::length).sum()
    }

    /// Length of the symmetric difference.
    pub fn length(&self) -> f64 {
        self.positive_length() + self.negative_length()
    }

    /// The loop seen from the new configuration back to the old one.
    pub fn reversed(&self) -> DisagreementLoop {
        DisagreementLoop { positive: self.negative.clone(), negative: self.positive.clone(), kind: self.kind }
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.positive.iter().chain(&self.negative)
    }

    pub fn touches_boundary(&self, domain: &ConvexDomain) -> bool {
        let tol = domain.eps();
        self.segments().any(|s| domain.on_boundary(s.a, tol) || domain.on_boundary(s.b, tol))
    }
}

/// Outcome of a single-site update.
#[derive(Debug, Clone)]
pub struct Update {
    pub log: EvolutionLog,
    pub config: PolygonalConfiguration,
    pub disagreement: DisagreementLoop,
    /// Id of the inserted or removed site.
    pub site: u64,
}

/// Adds a birth site. Its emission and velocity jumps come from the log's
/// keyed streams, so all other particles keep their randomness.
pub fn insert_birth(log: &EvolutionLog, old: &PolygonalConfiguration, site: SiteDraw) -> Result<Update> {
    let mut next = log.clone();
    let id = next.add_site(site)?;
    let config = evolve(&next)?;
    let disagreement = trace_loop(old, &config, log.domain())?;
    Ok(Update { log: next, config, disagreement, site: id })
}

/// Removes a birth site, archiving its randomness for exact re-insertion.
pub fn remove_birth(log: &EvolutionLog, old: &PolygonalConfiguration, id: u64) -> Result<Update> {
    let mut next = log.clone();
    next.remove_site(id)?;
    let config = evolve(&next)?;
    let disagreement = trace_loop(old, &config, log.domain())?;
    Ok(Update { log: next, config, disagreement, site: id })
}

/// Classifies the symmetric difference of two configurations and checks that
/// it forms one curve: every vertex has degree 2, except for exactly two ends
/// on the boundary in the chopped case.
pub fn trace_loop(
    old: &PolygonalConfiguration,
    new: &PolygonalConfiguration,
    domain: &ConvexDomain,
) -> Result<DisagreementLoop> {
    let tol = domain.eps();
    let (negative, positive) = symmetric_difference(old, new, tol);
    if negative.is_empty() && positive.is_empty() {
        return Ok(DisagreementLoop { positive, negative, kind: ClosureKind::Empty });
    }

    let mut index = PointIndex::new(tol);
    let mut ends: Vec<(usize, usize)> = Vec::new();
    for s in positive.iter().chain(&negative) {
        ends.push((index.insert(s.a).0, index.insert(s.b).0));
    }
    let nv = index.points().len();
    let mut degree = vec![0usize; nv];
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in &ends {
        degree[a] += 1;
        degree[b] += 1;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let root = find(&mut parent, 0);
    if (0..nv).any(|v| find(&mut parent, v) != root) {
        return Err(Error::Consistency("symmetric difference is not connected".into()));
    }
    let mut loose = Vec::new();
    for (v, &d) in degree.iter().enumerate() {
        match d {
            2 => {}
            1 => loose.push(v),
            _ => {
                let p = index.points()[v];
                return Err(Error::Consistency(format!(
                    "symmetric difference has a vertex of degree {d} at ({}, {})",
                    p.x, p.y
                )));
            }
        }
    }
    let kind = match loose.len() {
        0 => ClosureKind::Closed,
        2 if loose.iter().all(|&v| domain.on_boundary(index.points()[v], tol)) => ClosureKind::Chopped,
        n => {
            return Err(Error::Consistency(format!("symmetric difference has {n} loose ends off the boundary")));
        }
    };
    Ok(DisagreementLoop { positive, negative, kind })
}

/// `(old \ new, new \ old)` computed per carrier line.
fn symmetric_difference(
    old: &PolygonalConfiguration,
    new: &PolygonalConfiguration,
    tol: f64,
) -> (Vec<Segment>, Vec<Segment>) {
    let all: Vec<(bool, &Segment)> =
        old.edges.iter().map(|e| (false, e)).chain(new.edges.iter().map(|e| (true, e))).collect();
    let lines: Vec<Line> = all.iter().map(|(_, e)| e.line()).collect();
    let groups = group_lines(&lines, tol);

    let mut out_old = Vec::new();
    let mut out_new = Vec::new();
    for members in groups.values() {
        let line = lines[members[0]];
        let dir = line.direction();
        let mut olds = Vec::new();
        let mut news = Vec::new();
        for &m in members {
            let (is_new, e) = all[m];
            let (sa, sb) = (e.a.dot(dir), e.b.dot(dir));
            let iv = if sa <= sb { (sa, e.a, sb, e.b) } else { (sb, e.b, sa, e.a) };
            if is_new {
                news.push(iv);
            } else {
                olds.push(iv);
            }
        }
        olds.sort_by(|x, y| x.0.total_cmp(&y.0));
        news.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (_, pa, _, pb) in subtract(&olds, &news, tol) {
            out_old.push(Segment::with_carrier(pa, pb, line));
        }
        for (_, pa, _, pb) in subtract(&news, &olds, tol) {
            out_new.push(Segment::with_carrier(pa, pb, line));
        }
    }
    // deterministic order for replay
    let key = |s: &Segment| (s.a.x, s.a.y, s.b.x, s.b.y);
    out_old.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap_or(std::cmp::Ordering::Equal));
    out_new.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap_or(std::cmp::Ordering::Equal));
    (out_old, out_new)
}

type Interval = (f64, Point, f64, Point);

/// Parts of the sorted disjoint intervals `a` not covered by `b`. Endpoint
/// points are taken from whichever interval supplies the bound.
fn subtract(a: &[Interval], b: &[Interval], tol: f64) -> Vec<Interval> {
    let mut out = Vec::new();
    for &(a0, pa0, a1, pa1) in a {
        let mut cur = (a0, pa0);
        for &(b0, pb0, b1, pb1) in b {
            if b1 <= cur.0 + tol || b0 >= a1 - tol {
                if b0 >= a1 - tol {
                    break;
                }
                continue;
            }
            if b0 > cur.0 + tol {
                out.push((cur.0, cur.1, b0, pb0));
            }
            if b1 >= a1 - tol {
                cur = (a1, pa1);
                break;
            }
            cur = (b1, pb1);
        }
        if a1 - cur.0 > tol {
            out.push((cur.0, cur.1, a1, pa1));
        }
    }
    out
}

/// Clusters nearly coincident lines; the map is keyed by cluster root.
fn group_lines(lines: &[Line], tol: f64) -> HashMap<usize, Vec<usize>> {
    let n = lines.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lines[i].phi.total_cmp(&lines[j].phi));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let ang = tol.max(1e-9);
    for k in 0..n {
        let i = order[k];
        for step in 1..n {
            let j = order[(k + step) % n];
            let mut d = lines[j].phi - lines[i].phi;
            if k + step >= n {
                d += std::f64::consts::PI;
            }
            if d > ang {
                break;
            }
            if lines[i].coincides(&lines[j], ang) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arak::sample_arak;
    use crate::rng::stream;
    use rand::Rng;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment::new(Point::new(ax, ay), Point::new(bx, by))
    }

    #[test]
    fn identical_configurations_give_empty_loop() {
        let d = ConvexDomain::square(1.0).unwrap();
        let mut rng = stream(1, &[]);
        let (_, cfg) = sample_arak(&d, &mut rng).unwrap();
        let l = trace_loop(&cfg, &cfg, &d).unwrap();
        assert!(l.is_empty());
        assert_eq!(l.kind, ClosureKind::Empty);
    }

    #[test]
    fn rectangle_difference_is_a_closed_loop_of_four() {
        let d = ConvexDomain::square(2.0).unwrap();
        let old = PolygonalConfiguration::empty();
        let new = PolygonalConfiguration::new(vec![
            seg(0.0, 0.0, 1.0, 0.0),
            seg(1.0, 0.0, 1.0, 0.5),
            seg(1.0, 0.5, 0.0, 0.5),
            seg(0.0, 0.5, 0.0, 0.0),
        ]);
        let l = trace_loop(&old, &new, &d).unwrap();
        assert_eq!(l.kind, ClosureKind::Closed);
        assert_eq!(l.positive.len(), 4);
        assert!(l.negative.is_empty());
    }

    #[test]
    fn partial_overlap_on_one_line_is_split() {
        // the old path runs along y=0 further than the new one
        let d = ConvexDomain::square(2.0).unwrap();
        let old = PolygonalConfiguration::new(vec![seg(-2.0, 0.0, 1.0, 0.0), seg(1.0, 0.0, 2.0, 1.0)]);
        let new = PolygonalConfiguration::new(vec![seg(-2.0, 0.0, 0.5, 0.0), seg(0.5, 0.0, 2.0, -1.0)]);
        let l = trace_loop(&old, &new, &d).unwrap();
        assert_eq!(l.kind, ClosureKind::Chopped);
        assert_eq!(l.negative.len(), 2);
        assert_eq!(l.positive.len(), 1);
        assert!((l.negative_length() - (0.5 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn insertion_into_empty_log_gives_the_wedge() {
        let d = ConvexDomain::square(1.0).unwrap();
        let log = EvolutionLog::new(d.clone(), 3);
        let up =
            insert_birth(&log, &PolygonalConfiguration::empty(), SiteDraw::Interior(Point::new(0.0, 0.1))).unwrap();
        assert!(up.disagreement.negative.is_empty());
        let mut a = up.disagreement.positive.clone();
        let mut b = up.config.edges.clone();
        let key = |s: &Segment| (s.a.x, s.a.y);
        a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        assert_eq!(a.len(), b.len());
        assert!((up.disagreement.length() - up.config.total_length()).abs() < 1e-12);
        let chopped = up.config.touches_boundary(&d);
        assert_eq!(up.disagreement.kind == ClosureKind::Chopped, chopped);
    }

    #[test]
    fn insert_then_remove_restores_and_loops_match() {
        let d = ConvexDomain::square(1.0).unwrap();
        let mut rng = stream(8, &[]);
        for _ in 0..60 {
            let (log, cfg) = sample_arak(&d, &mut rng).unwrap();
            let x = d.sample_interior(&mut rng);
            let ins = insert_birth(&log, &cfg, SiteDraw::Interior(x)).unwrap();
            assert_ne!(ins.disagreement.kind, ClosureKind::Empty);
            let rem = remove_birth(&ins.log, &ins.config, ins.site).unwrap();
            assert_eq!(rem.config, cfg);
            assert!(rem.log.same_births(&log));
            let back = rem.disagreement.reversed();
            assert_eq!(back.positive, ins.disagreement.positive);
            assert_eq!(back.negative, ins.disagreement.negative);
        }
    }

    #[test]
    fn boundary_insertion_gives_a_chopped_path() {
        let d = ConvexDomain::disk(Point::ORIGIN, 1.0).unwrap();
        let mut rng = stream(12, &[]);
        for _ in 0..40 {
            let (log, cfg) = sample_arak(&d, &mut rng).unwrap();
            let line = d.sample_hitting_line(&mut rng);
            let Some(site) = crate::arak::boundary_birth_from_line(&d, &line) else { continue };
            let up = insert_birth(&log, &cfg, site).unwrap();
            assert_eq!(up.disagreement.kind, ClosureKind::Chopped);
        }
    }

    #[test]
    fn removal_of_the_only_birth_is_the_wedge() {
        let d = ConvexDomain::square(1.0).unwrap();
        let mut log = EvolutionLog::new(d.clone(), 4);
        log.add_site(SiteDraw::Interior(Point::new(-0.2, 0.3))).unwrap();
        let cfg = evolve(&log).unwrap();
        let up = remove_birth(&log, &cfg, 0).unwrap();
        assert!(up.config.is_empty());
        assert!((up.disagreement.negative_length() - cfg.total_length()).abs() < 1e-12);
        assert!(remove_birth(&log, &cfg, 7).is_err());
    }

    #[test]
    fn random_insertions_trace_single_curves() {
        let d = ConvexDomain::square(1.0).unwrap();
        let mut rng = stream(13, &[]);
        let (mut log, mut cfg) = sample_arak(&d, &mut rng).unwrap();
        for _ in 0..150 {
            let up = if log.is_empty() || rng.random::<bool>() {
                insert_birth(&log, &cfg, SiteDraw::Interior(d.sample_interior(&mut rng))).unwrap()
            } else {
                let ids: Vec<u64> = log.ids().collect();
                let id = ids[rng.random_range(0..ids.len())];
                remove_birth(&log, &cfg, id).unwrap()
            };
            assert_ne!(up.disagreement.kind, ClosureKind::Empty);
            log = up.log;
            cfg = up.config;
        }
    }
}
