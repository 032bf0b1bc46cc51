//! Self-avoiding direction-jump walks and the contour birth sampler.
//!
//! The walk moves at unit speed and turns at rate 4 per unit length by an
//! angle with density `|sin|/4` on `(0, 2 pi)`. A loop-closing half-line from
//! the start is drawn with the same angular law relative to the initial
//! direction; the walk closes a contour when it first reaches that half-line.
//! A walk started at `x` with a uniform direction closes into a fixed oriented
//! contour with probability element `e^{-4 (len - len e*)} prod mu(dl) / (8 pi dx)`,
//! so spawning at `4 pi` per unit area, keeping only walks whose start is the
//! leftmost vertex and accepting with `e^{-4 len e*} e^{-(beta - 2) len}`
//! yields births with intensity exactly `Theta^[beta]`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Contour, MassEstimate};
use crate::error::{Error, Result};
use crate::geometry::{segment_intersection, ConvexDomain, Point, SegmentHit};
use crate::rng;

/// Direction updates per unit length.
pub const DIRECTION_RATE: f64 = 4.0;

/// Walk starts per unit area for the birth sampler.
pub const SPAWN_RATE: f64 = 4.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KillReason {
    SelfHit,
    Boundary,
    Cap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkOutcome {
    Closed { contour: Contour, closing_length: f64 },
    Killed(KillReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkProposal {
    pub start: Point,
    pub initial_direction: f64,
    /// Angle of the closing half-line relative to the initial direction.
    pub closing_angle: f64,
    /// Turning points, starting with `start`.
    pub path: Vec<Point>,
    /// Length walked before closing or being killed.
    pub walked: f64,
    pub outcome: WalkOutcome,
}

impl WalkProposal {
    pub fn contour(&self) -> Option<&Contour> {
        match &self.outcome {
            WalkOutcome::Closed { contour, .. } => Some(contour),
            WalkOutcome::Killed(_) => None,
        }
    }
}

/// Turning angle with density `|sin phi| / 4` on `(0, 2 pi)`.
fn turn<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let a = (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos();
    if rng.random::<bool>() {
        a + PI
    } else {
        a
    }
}

/// Parameter along `p + s d`, `s` in `(0, 1]`, where the segment meets the
/// ray `o + t u`, `t > 0`.
fn ray_hit(p: Point, d: Point, o: Point, u: Point) -> Option<f64> {
    let den = d.cross(u);
    if den.abs() < 1e-300 {
        return None;
    }
    let w = o - p;
    let s = w.cross(u) / den;
    let t = w.cross(d) / den;
    (s > 1e-12 && s <= 1.0 && t > 0.0).then_some(s)
}

enum Stop {
    SelfHit,
    Closing(Point),
    Boundary,
}

struct Walker {
    path: Vec<Point>,
    walked: f64,
}

impl Walker {
    /// Extends the walk by one straight piece and reports the first event on it.
    fn advance(
        &mut self,
        dir: Point,
        step: f64,
        closing: Option<(Point, Point)>,
        domain: Option<&ConvexDomain>,
    ) -> Option<Stop> {
        let p = *self.path.last().unwrap();
        let d = dir * step;
        let mut first: Option<(f64, Stop)> = None;
        let offer = |s: f64, stop: Stop, first: &mut Option<(f64, Stop)>| {
            if first.as_ref().is_none_or(|(b, _)| s < *b) {
                *first = Some((s, stop));
            }
        };
        let k = self.path.len();
        if k >= 3 {
            let end = p + d;
            let tol = 1e-12 * (1.0 + step);
            for i in 0..k - 2 {
                if let SegmentHit::Point { s, .. } = segment_intersection(p, end, self.path[i], self.path[i + 1], tol) {
                    if s > 1e-12 {
                        offer(s, Stop::SelfHit, &mut first);
                    }
                }
            }
        }
        if let Some((o, u)) = closing {
            if k >= 2 {
                if let Some(s) = ray_hit(p, d, o, u) {
                    offer(s, Stop::Closing(p + d * s), &mut first);
                }
            }
        }
        if let Some(dom) = domain {
            let exit = dom.chord(p, d).map(|(_, hi)| hi).unwrap_or(0.0);
            if exit <= 1.0 {
                offer(exit.max(0.0), Stop::Boundary, &mut first);
            }
        }
        match first {
            Some((s, stop)) => {
                self.walked += s * step;
                Some(stop)
            }
            None => {
                self.walked += step;
                self.path.push(p + d);
                None
            }
        }
    }
}

/// Runs one closing walk from `start`; `domain = None` walks in the plane.
pub fn run_contour_walk<R: Rng + ?Sized>(
    domain: Option<&ConvexDomain>,
    start: Point,
    rng: &mut R,
    length_cap: f64,
) -> Result<WalkProposal> {
    if !(length_cap > 0.0) {
        return Err(Error::Parameter(format!("length cap must be positive, got {length_cap}")));
    }
    if let Some(d) = domain {
        if !d.contains(start) {
            return Err(Error::Parameter(format!("walk start {start:?} is outside the domain")));
        }
    }
    let psi0 = 2.0 * PI * rng.random::<f64>();
    let phi_star = turn(rng);
    let closing = (start, Point::unit(psi0 + phi_star));
    let mut w = Walker { path: vec![start], walked: 0.0 };
    let mut psi = psi0;
    let finish = |w: Walker, outcome| WalkProposal {
        start,
        initial_direction: psi0,
        closing_angle: phi_star,
        path: w.path,
        walked: w.walked,
        outcome,
    };
    loop {
        let mut step = rng::exp(rng, DIRECTION_RATE);
        let capped = w.walked + step >= length_cap;
        if capped {
            step = length_cap - w.walked;
        }
        match w.advance(Point::unit(psi), step, Some(closing), domain) {
            Some(Stop::SelfHit) => return Ok(finish(w, WalkOutcome::Killed(KillReason::SelfHit))),
            Some(Stop::Boundary) => return Ok(finish(w, WalkOutcome::Killed(KillReason::Boundary))),
            Some(Stop::Closing(q)) => {
                let mut verts = w.path.clone();
                verts.push(q);
                let closing_length = q.dist(start);
                return Ok(match Contour::new(verts, domain) {
                    Ok(contour) => finish(w, WalkOutcome::Closed { contour, closing_length }),
                    // a numerically degenerate closure; probability zero
                    Err(_) => finish(w, WalkOutcome::Killed(KillReason::SelfHit)),
                });
            }
            None if capped => return Ok(finish(w, WalkOutcome::Killed(KillReason::Cap))),
            None => psi += turn(rng),
        }
    }
}

/// Lifetime of the plane walk killed only on hitting its past trajectory,
/// truncated at `cap`; the flag reports truncation.
pub fn self_avoiding_lifetime<R: Rng + ?Sized>(rng: &mut R, cap: f64) -> (f64, bool) {
    let mut w = Walker { path: vec![Point::ORIGIN], walked: 0.0 };
    let mut psi = 2.0 * PI * rng.random::<f64>();
    loop {
        let mut step = rng::exp(rng, DIRECTION_RATE);
        let capped = w.walked + step >= cap;
        if capped {
            step = cap - w.walked;
        }
        match w.advance(Point::unit(psi), step, None, None) {
            Some(_) => return (w.walked, false),
            None if capped => return (cap, true),
            None => psi += turn(rng),
        }
    }
}

/// Which starting vertices a walk may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexRule {
    /// Only the leftmost vertex: each contour is produced once per orientation.
    Leftmost,
    /// Any vertex: estimates mass per vertex element.
    Any,
}

/// Birth weight `e^{-4 len e*} e^{-(beta - 2) len}` of a closed walk, zero if
/// killed or if the start violates the vertex rule.
pub fn walk_birth_weight(w: &WalkProposal, beta: f64, rule: VertexRule) -> f64 {
    match &w.outcome {
        WalkOutcome::Closed { contour, closing_length } => {
            if rule == VertexRule::Leftmost && contour.leftmost() != 0 {
                return 0.0;
            }
            (-4.0 * closing_length - (beta - 2.0) * contour.length()).exp()
        }
        WalkOutcome::Killed(_) => 0.0,
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 2.0) || !beta.is_finite() {
        return Err(Error::Regime(format!("the walk sampler needs beta >= 2, got {beta}")));
    }
    Ok(())
}

/// Default walk cap.
pub(crate) fn default_cap(domain: &ConvexDomain) -> f64 {
    50.0 * domain.diameter()
}

/// One spawn of the birth sampler: a uniform start in `domain`, one walk and
/// the thinning step. Spawns arrive at rate `SPAWN_RATE * A(D)`; the accepted
/// contours then arrive at rate `Theta^[beta]_D(dtheta)`.
pub fn contour_birth_sampler<R: Rng + ?Sized>(
    domain: &ConvexDomain,
    beta: f64,
    rng: &mut R,
) -> Result<Option<(Contour, f64)>> {
    check_beta(beta)?;
    let x = domain.sample_interior(rng);
    let w = run_contour_walk(Some(domain), x, rng, default_cap(domain))?;
    let weight = walk_birth_weight(&w, beta, VertexRule::Leftmost);
    if weight > 0.0 && rng.random::<f64>() < weight {
        if let WalkOutcome::Closed { contour, .. } = w.outcome {
            return Ok(Some((contour, weight)));
        }
    }
    Ok(None)
}

/// A Poisson contour process with intensity `Theta^[beta]_D`, obtained by
/// thinning a Poisson number of spawns.
pub fn poisson_contours<R: Rng + ?Sized>(domain: &ConvexDomain, beta: f64, rng: &mut R) -> Result<Vec<Contour>> {
    check_beta(beta)?;
    let n = rng::poisson(rng, SPAWN_RATE * domain.area());
    let mut out = Vec::new();
    for _ in 0..n {
        if let Some((c, _)) = contour_birth_sampler(domain, beta, rng)? {
            out.push(c);
        }
    }
    Ok(out)
}

/// Importance-sampled tilted mass of the contours satisfying `pred`.
///
/// With a domain, starts are uniform and the result is the mass in `C_D`.
/// Without one, every walk starts at the origin and the result is a density
/// per unit area: of contours by leftmost vertex, or per vertex element.
pub fn theta_walk_estimate<R: Rng + ?Sized>(
    domain: Option<&ConvexDomain>,
    beta: f64,
    rule: VertexRule,
    length_cap: f64,
    walks: u64,
    mut pred: impl FnMut(&Contour) -> bool,
    rng: &mut R,
) -> Result<MassEstimate> {
    check_beta(beta)?;
    let scale = SPAWN_RATE * domain.map_or(1.0, ConvexDomain::area);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..walks {
        let x = domain.map_or(Point::ORIGIN, |d| d.sample_interior(rng));
        let w = run_contour_walk(domain, x, rng, length_cap)?;
        let mut v = walk_birth_weight(&w, beta, rule);
        if v > 0.0 && !pred(w.contour().unwrap()) {
            v = 0.0;
        }
        sum += v;
        sum_sq += v * v;
    }
    Ok(MassEstimate::from_weights(scale, sum, sum_sq, walks))
}
