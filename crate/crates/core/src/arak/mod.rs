//! Exact sampling of the Arak process through its particle representation.
//!
//! The x-axis plays the role of time ("r-time"). Interior birth sites emit two
//! particles moving to the right, boundary births emit one along a line of the
//! invariant measure, velocities jump by the kernel in [`velocity`], and
//! particles die on collision or when leaving the domain. The traced
//! trajectories form a polygonal configuration distributed as the Arak field.

mod evolve;
mod log;
pub mod velocity;

pub use evolve::{evolve, evolve_unchecked};
pub use log::{BirthRecord, EvolutionLog, LOG_SCHEMA_VERSION};
pub use velocity::{sample_velocity_jump, sample_velocity_pair};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{ConvexDomain, Line, Point, PolygonalConfiguration};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BirthKind {
    Interior,
    Boundary,
}

/// Velocities emitted at a birth site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emission {
    Pair(f64, f64),
    Single(f64),
}

impl Emission {
    pub fn velocities(&self) -> Vec<f64> {
        match *self {
            Emission::Pair(a, b) => vec![a, b],
            Emission::Single(v) => vec![v],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthSite {
    pub id: u64,
    pub location: Point,
    pub emission: Emission,
}

impl BirthSite {
    pub fn kind(&self) -> BirthKind {
        match self.emission {
            Emission::Pair(..) => BirthKind::Interior,
            Emission::Single(_) => BirthKind::Boundary,
        }
    }
}

/// Location of a birth site before its emission is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteDraw {
    Interior(Point),
    /// Entry point of a line into the domain, with the line's slope.
    Boundary {
        location: Point,
        velocity: f64,
    },
}

/// One straight stretch of a particle path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: Point,
    pub end: Point,
    pub velocity: f64,
}

impl Piece {
    #[inline]
    pub fn t0(&self) -> f64 {
        self.start.x
    }

    #[inline]
    pub fn t1(&self) -> f64 {
        self.end.x
    }

    #[inline]
    pub fn y_at(&self, t: f64) -> f64 {
        self.start.y + self.velocity * (t - self.start.x)
    }

    pub fn carrier(&self) -> Line {
        Line::through(self.start, Point::new(1.0, self.velocity))
    }
}

/// A particle path from its birth to the domain exit, ignoring collisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeTrajectory {
    pub owner: (u64, u8),
    pub pieces: Vec<Piece>,
}

impl FreeTrajectory {
    /// Velocity updates as `(r-time, new velocity)` pairs.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        self.pieces.iter().skip(1).map(|p| (p.start.x, p.velocity)).collect()
    }

    pub fn exit_time(&self) -> f64 {
        self.pieces.last().map_or(f64::NEG_INFINITY, Piece::t1)
    }
}

/// Interior birth count Poisson with mean `pi A(D)`, boundary births at the
/// entry points of Poisson many invariant lines hitting the domain.
pub fn sample_birth_sites<R: Rng + ?Sized>(domain: &ConvexDomain, rng: &mut R) -> Vec<SiteDraw> {
    let mut out = Vec::new();
    let area = domain.area();
    if area > 0.0 {
        let n = rng::poisson(rng, std::f64::consts::PI * area);
        for _ in 0..n {
            out.push(SiteDraw::Interior(domain.sample_interior(rng)));
        }
    }
    let m = rng::poisson(rng, domain.perimeter());
    for _ in 0..m {
        if let Some(draw) = boundary_birth_from_line(domain, &domain.sample_hitting_line(rng)) {
            out.push(draw);
        }
    }
    out
}

/// The entry point of a line into the domain in increasing r-time.
pub fn boundary_birth_from_line(domain: &ConvexDomain, line: &Line) -> Option<SiteDraw> {
    let (a, b) = domain.clip_line(line)?;
    let location = if a.x <= b.x { a } else { b };
    let velocity = line.slope();
    velocity.is_finite().then_some(SiteDraw::Boundary { location, velocity })
}

/// Draws an Arak configuration: sites, emissions and trajectories recorded
/// in a log keyed by a fresh stream seed, then the collision sweep.
pub fn sample_arak<R: Rng + ?Sized>(
    domain: &ConvexDomain,
    rng: &mut R,
) -> Result<(EvolutionLog, PolygonalConfiguration)> {
    domain.validate()?;
    let seed: u64 = rng.random();
    let sites = sample_birth_sites(domain, rng);
    let log = EvolutionLog::from_sites(domain.clone(), seed, &sites)?;
    let cfg = evolve(&log)?;
    Ok((log, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::check_admissible;
    use crate::rng::stream;
    use std::f64::consts::PI;

    #[test]
    fn birth_counts_have_poisson_means() {
        let sq = ConvexDomain::square(2.0).unwrap();
        let disk = ConvexDomain::disk(Point::ORIGIN, 1.0).unwrap();
        let mut rng = stream(1, &[]);
        let n = 2000;
        let (mut interior, mut boundary) = (0usize, 0usize);
        for _ in 0..n {
            for s in sample_birth_sites(&sq, &mut rng) {
                if matches!(s, SiteDraw::Interior(_)) {
                    interior += 1;
                }
            }
            for s in sample_birth_sites(&disk, &mut rng) {
                if let SiteDraw::Boundary { location, .. } = s {
                    assert!(disk.on_boundary(location, 1e-12));
                    boundary += 1;
                }
            }
        }
        let mi = interior as f64 / n as f64;
        let mb = boundary as f64 / n as f64;
        let target_i = PI * 16.0;
        assert!((mi - target_i).abs() < 3.0 * (target_i / n as f64).sqrt() + 0.05, "{mi}");
        assert!((mb - 2.0 * PI).abs() < 3.0 * (2.0 * PI / n as f64).sqrt() + 0.02, "{mb}");
    }

    #[test]
    fn zero_area_domain_has_no_interior_births() {
        let point = ConvexDomain::Disk { center: Point::ORIGIN, radius: 0.0 };
        let mut rng = stream(2, &[]);
        for _ in 0..50 {
            assert!(sample_birth_sites(&point, &mut rng).iter().all(|s| !matches!(s, SiteDraw::Interior(_))));
        }
    }

    #[test]
    fn boundary_entry_is_leftmost_chord_end() {
        let d = ConvexDomain::square(1.0).unwrap();
        let l = Line::through(Point::new(0.0, 0.2), Point::new(1.0, 0.5));
        match boundary_birth_from_line(&d, &l).unwrap() {
            SiteDraw::Boundary { location, velocity } => {
                assert!((location.x + 1.0).abs() < 1e-12);
                assert!((velocity - 0.5).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sampled_configurations_are_admissible_and_replayable() {
        let d = ConvexDomain::square(1.0).unwrap();
        let mut rng = stream(9, &[]);
        for _ in 0..200 {
            let (log, cfg) = sample_arak(&d, &mut rng).unwrap();
            assert_eq!(check_admissible(&cfg, &d), Ok(()));
            assert_eq!(evolve(&log).unwrap(), cfg);
        }
    }

    #[test]
    fn vertex_count_mean_is_bounded() {
        // mean internal vertex count on (-1,1)^2 is at most 16 pi
        let d = ConvexDomain::square(1.0).unwrap();
        let mut rng = stream(10, &[]);
        let n = 400;
        let total: usize = (0..n).map(|_| sample_arak(&d, &mut rng).unwrap().1.interior_vertex_count(&d)).sum();
        let mean = total as f64 / n as f64;
        assert!(mean <= 16.0 * PI, "{mean}");
    }
}
