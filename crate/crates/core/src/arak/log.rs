use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::velocity::{sample_velocity_jump, sample_velocity_pair};
use super::{BirthKind, BirthSite, Emission, FreeTrajectory, Piece, SiteDraw};
use crate::error::{param, Error, Result};
use crate::geometry::{ConvexDomain, Point};
use crate::rng::{stream, tag};

pub const LOG_SCHEMA_VERSION: u32 = 1;

/// A birth site with its materialized trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthRecord {
    pub site: BirthSite,
    pub trajectories: Vec<FreeTrajectory>,
}

/// Complete randomness record of one realisation of the particle system.
///
/// Emissions and velocity jumps of site `id` come from streams keyed by
/// `(seed, id, branch)`, so adding or removing a site never changes the
/// draws of another one. Removed sites move to an archive and can be
/// restored bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionLog {
    domain: ConvexDomain,
    seed: u64,
    next_id: u64,
    births: BTreeMap<u64, Arc<BirthRecord>>,
    archive: BTreeMap<u64, Arc<BirthRecord>>,
}

impl EvolutionLog {
    pub fn new(domain: ConvexDomain, seed: u64) -> Self {
        EvolutionLog { domain, seed, next_id: 0, births: BTreeMap::new(), archive: BTreeMap::new() }
    }

    pub fn from_sites(domain: ConvexDomain, seed: u64, sites: &[SiteDraw]) -> Result<Self> {
        let mut log = EvolutionLog::new(domain, seed);
        for s in sites {
            log.add_site(*s)?;
        }
        Ok(log)
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.births.len()
    }

    pub fn is_empty(&self) -> bool {
        self.births.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &BirthRecord> {
        self.births.values().map(|r| r.as_ref())
    }

    pub fn sites(&self) -> impl Iterator<Item = &BirthSite> {
        self.records().map(|r| &r.site)
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.births.keys().copied()
    }

    pub fn get(&self, id: u64) -> Option<&BirthRecord> {
        self.births.get(&id).map(|r| r.as_ref())
    }

    pub fn archived(&self, id: u64) -> Option<&BirthRecord> {
        self.archive.get(&id).map(|r| r.as_ref())
    }

    /// The id the next added site will receive.
    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Adds a site, drawing its emission and jumps from its keyed streams.
    pub fn add_site(&mut self, draw: SiteDraw) -> Result<u64> {
        let tol = self.domain.eps();
        let location = match draw {
            SiteDraw::Interior(p) => p,
            SiteDraw::Boundary { location, .. } => location,
        };
        if !location.is_finite() {
            return param("birth site is not finite");
        }
        match draw {
            SiteDraw::Interior(p) if !self.domain.contains(p) => {
                return param(format!("interior birth ({}, {}) is outside the domain", p.x, p.y));
            }
            SiteDraw::Boundary { location, velocity } => {
                if !velocity.is_finite() || !self.domain.on_boundary(location, tol) {
                    return param("boundary birth must lie on the boundary with finite velocity");
                }
                let inward = self.domain.chord(location, Point::new(1.0, velocity)).is_some_and(|(_, s)| s > tol);
                if !inward {
                    return param("boundary birth velocity does not point into the domain");
                }
            }
            _ => {}
        }
        if self.sites().any(|s| s.location.dist(location) <= tol) {
            return param(format!("a birth site already exists at ({}, {})", location.x, location.y));
        }
        let id = self.next_id;
        self.next_id += 1;
        let emission = match draw {
            SiteDraw::Interior(_) => {
                let (a, b) = sample_velocity_pair(&mut stream(self.seed, &[tag::EMISSION, id]));
                Emission::Pair(a, b)
            }
            SiteDraw::Boundary { velocity, .. } => Emission::Single(velocity),
        };
        let site = BirthSite { id, location, emission };
        let trajectories = emission
            .velocities()
            .into_iter()
            .enumerate()
            .map(|(b, v)| {
                let mut rng = stream(self.seed, &[tag::TRAJECTORY, id, b as u64]);
                trace_branch(&self.domain, (id, b as u8), location, v, |p, v, t_exit| {
                    let (w, u) = sample_velocity_jump(v, &mut rng);
                    let t = p.x + w;
                    (t < t_exit).then_some((t, u))
                })
            })
            .collect();
        self.births.insert(id, Arc::new(BirthRecord { site, trajectories }));
        Ok(id)
    }

    /// Moves a site into the archive.
    pub fn remove_site(&mut self, id: u64) -> Result<()> {
        let rec = self.births.remove(&id).ok_or_else(|| Error::Parameter(format!("unknown birth site {id}")))?;
        self.archive.insert(id, rec);
        Ok(())
    }

    /// Re-inserts an archived site with its original randomness.
    pub fn restore_site(&mut self, id: u64) -> Result<()> {
        let rec =
            self.archive.remove(&id).ok_or_else(|| Error::Parameter(format!("birth site {id} is not archived")))?;
        self.births.insert(id, rec);
        Ok(())
    }

    pub fn clear_archive(&mut self) {
        self.archive.clear();
    }

    /// Equality ignoring the archive.
    pub fn same_births(&self, other: &EvolutionLog) -> bool {
        self.domain == other.domain && self.seed == other.seed && self.births == other.births
    }

    /// Serializes live sites as JSON lines after a header line.
    pub fn to_json_lines(&self) -> Result<String> {
        let header = Header {
            schema_version: LOG_SCHEMA_VERSION,
            domain: self.domain.clone(),
            seed: self.seed,
            next_id: self.next_id,
        };
        let mut out = serde_json::to_string(&header)?;
        out.push('\n');
        for rec in self.records() {
            let line = BirthLine {
                id: rec.site.id,
                kind: rec.site.kind(),
                location: rec.site.location,
                velocities: rec.site.emission.velocities(),
                jumps: rec.trajectories.iter().map(FreeTrajectory::jumps).collect(),
            };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses the format of [`to_json_lines`](Self::to_json_lines) and
    /// rebuilds the trajectories from the recorded jumps.
    pub fn from_json_lines(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Header = serde_json::from_str(lines.next().ok_or_else(|| Error::Serde("empty log".into()))?)?;
        if header.schema_version != LOG_SCHEMA_VERSION {
            return Err(Error::Serde(format!("unsupported log schema {}", header.schema_version)));
        }
        header.domain.validate()?;
        let mut log = EvolutionLog::new(header.domain, header.seed);
        log.next_id = header.next_id;
        for l in lines {
            let b: BirthLine = serde_json::from_str(l)?;
            let emission = match (b.kind, b.velocities.as_slice()) {
                (BirthKind::Interior, &[v1, v2]) => Emission::Pair(v1, v2),
                (BirthKind::Boundary, &[v]) => Emission::Single(v),
                _ => return Err(Error::Serde(format!("site {} has a malformed emission", b.id))),
            };
            let vs = emission.velocities();
            if b.jumps.len() != vs.len() {
                return Err(Error::Serde(format!("site {} has {} jump lists", b.id, b.jumps.len())));
            }
            let mut trajectories = Vec::new();
            for (k, (v, jumps)) in vs.iter().zip(&b.jumps).enumerate() {
                let mut it = jumps.iter().copied();
                let tr = trace_branch(&log.domain, (b.id, k as u8), b.location, *v, |_, _, t_exit| {
                    it.next().filter(|j| j.0 < t_exit)
                });
                if tr.pieces.len() != jumps.len() + 1 {
                    return Err(Error::Serde(format!("site {} jumps do not fit the domain", b.id)));
                }
                trajectories.push(tr);
            }
            if b.id >= log.next_id {
                log.next_id = b.id + 1;
            }
            let site = BirthSite { id: b.id, location: b.location, emission };
            log.births.insert(b.id, Arc::new(BirthRecord { site, trajectories }));
        }
        Ok(log)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    domain: ConvexDomain,
    seed: u64,
    next_id: u64,
}

#[derive(Serialize, Deserialize)]
struct BirthLine {
    id: u64,
    kind: BirthKind,
    location: Point,
    velocities: Vec<f64>,
    jumps: Vec<Vec<(f64, f64)>>,
}

/// Follows one particle from `start` to the domain exit. `next_jump` is asked
/// for the next update given the current start, velocity and exit r-time; it
/// returns `None` when the particle leaves before updating.
fn trace_branch(
    domain: &ConvexDomain,
    owner: (u64, u8),
    start: Point,
    v0: f64,
    mut next_jump: impl FnMut(Point, f64, f64) -> Option<(f64, f64)>,
) -> FreeTrajectory {
    let mut pieces = Vec::new();
    let (mut p, mut v) = (start, v0);
    loop {
        let t_exit = match domain.chord(p, Point::new(1.0, v)) {
            Some((_, s)) if s > 0.0 => p.x + s,
            _ => p.x,
        };
        match next_jump(p, v, t_exit) {
            Some((t, u)) => {
                let q = Point::new(t, p.y + v * (t - p.x));
                pieces.push(Piece { start: p, end: q, velocity: v });
                p = q;
                v = u;
            }
            None => {
                let q = Point::new(t_exit, p.y + v * (t_exit - p.x));
                if t_exit > p.x {
                    pieces.push(Piece { start: p, end: q, velocity: v });
                }
                break;
            }
        }
    }
    FreeTrajectory { owner, pieces }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_log() -> EvolutionLog {
        let d = ConvexDomain::disk(Point::new(0.2, -0.1), 1.5).unwrap();
        let mut rng = stream(4, &[]);
        let sites = super::super::sample_birth_sites(&d, &mut rng);
        EvolutionLog::from_sites(d, 77, &sites).unwrap()
    }

    #[test]
    fn trajectories_increase_in_time_and_exit() {
        let log = sample_log();
        let d = log.domain().clone();
        for rec in log.records() {
            for tr in &rec.trajectories {
                let mut t = f64::NEG_INFINITY;
                for (k, p) in tr.pieces.iter().enumerate() {
                    assert!(p.t0() < p.t1());
                    assert!(p.t0() >= t);
                    if k > 0 {
                        assert_eq!(p.start, tr.pieces[k - 1].end);
                    }
                    t = p.t1();
                }
                assert!(d.on_boundary(tr.pieces.last().unwrap().end, 1e-9));
            }
        }
    }

    #[test]
    fn json_lines_round_trip_is_exact() {
        let log = sample_log();
        let text = log.to_json_lines().unwrap();
        assert!(text.lines().next().unwrap().contains("\"schema_version\":1"));
        let back = EvolutionLog::from_json_lines(&text).unwrap();
        assert!(back.same_births(&log));
        assert_eq!(back.next_id(), log.next_id());
    }

    #[test]
    fn keyed_streams_make_sites_independent_of_order() {
        let d = ConvexDomain::square(1.0).unwrap();
        let a = SiteDraw::Interior(Point::new(0.1, 0.2));
        let b = SiteDraw::Interior(Point::new(-0.3, 0.4));
        let mut l1 = EvolutionLog::new(d.clone(), 5);
        l1.add_site(a).unwrap();
        l1.add_site(b).unwrap();
        let mut l2 = EvolutionLog::new(d, 5);
        l2.add_site(a).unwrap();
        l2.remove_site(0).unwrap();
        l2.add_site(b).unwrap();
        assert_eq!(l1.get(1), l2.get(1));
    }

    #[test]
    fn duplicate_and_outside_sites_are_rejected() {
        let d = ConvexDomain::square(1.0).unwrap();
        let mut log = EvolutionLog::new(d, 1);
        log.add_site(SiteDraw::Interior(Point::new(0.1, 0.1))).unwrap();
        assert!(matches!(log.add_site(SiteDraw::Interior(Point::new(0.1, 0.1))), Err(Error::Parameter(_))));
        assert!(matches!(log.add_site(SiteDraw::Interior(Point::new(3.0, 0.1))), Err(Error::Parameter(_))));
        let outward = SiteDraw::Boundary { location: Point::new(1.0, 0.0), velocity: 0.3 };
        assert!(matches!(log.add_site(outward), Err(Error::Parameter(_))));
    }

    #[test]
    fn archive_restores_exactly() {
        let mut log = sample_log();
        let before = log.clone();
        let id = log.ids().next().unwrap();
        log.remove_site(id).unwrap();
        assert!(log.get(id).is_none());
        log.restore_site(id).unwrap();
        assert_eq!(log, before);
        assert!(log.remove_site(9999).is_err());
    }
}
