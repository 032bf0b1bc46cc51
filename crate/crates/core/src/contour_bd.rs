//! Contour birth and death dynamics with empty boundary.
//!
//! Births are proposed with intensity `Theta^[beta]_D` by thinning walk spawns
//! arriving at rate `4 pi A(D)`, and accepted iff disjoint from every present
//! contour (touching counts as meeting). Each contour dies at rate 1.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contour::{contour_birth_sampler, pairwise_disjoint, poisson_contours, Contour, SPAWN_RATE};
use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, PolygonalConfiguration};
use crate::metropolis::ChainSchedule;
use crate::rng;
use crate::stats::{poisson_dispersion, Dispersion};

/// Pairwise disjoint contours.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContourEnsemble {
    pub contours: Vec<Contour>,
}

impl ContourEnsemble {
    pub fn new(contours: Vec<Contour>) -> Result<Self> {
        if !pairwise_disjoint(&contours) {
            return Err(Error::Admissibility("ensemble contours intersect".into()));
        }
        Ok(ContourEnsemble { contours })
    }

    pub fn len(&self) -> usize {
        self.contours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.contours.iter().map(Contour::length).sum()
    }

    pub fn is_disjoint_from(&self, c: &Contour) -> bool {
        !self.contours.iter().any(|d| d.intersects(c))
    }

    pub fn to_configuration(&self) -> PolygonalConfiguration {
        PolygonalConfiguration::new(self.contours.iter().flat_map(Contour::segments).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BdEvent {
    /// A spawn whose walk did not produce a birth.
    Thinned,
    Born,
    /// A birth meeting the present ensemble.
    Rejected,
    Died,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BdCounters {
    pub spawns: u64,
    pub births: u64,
    pub rejected: u64,
    pub deaths: u64,
}

#[derive(Debug, Clone)]
pub struct BdState {
    pub ensemble: ContourEnsemble,
    pub s_time: f64,
    pub domain: ConvexDomain,
    pub beta: f64,
    /// When false every birth is accepted, giving the free Poisson process.
    pub exclusion: bool,
    pub counters: BdCounters,
}

impl BdState {
    pub fn new(domain: ConvexDomain, beta: f64) -> Result<Self> {
        domain.validate()?;
        check_beta(beta)?;
        Ok(BdState {
            ensemble: ContourEnsemble::default(),
            s_time: 0.0,
            domain,
            beta,
            exclusion: true,
            counters: BdCounters::default(),
        })
    }

    pub fn without_exclusion(mut self) -> Self {
        self.exclusion = false;
        self
    }

    fn spawn_rate(&self) -> f64 {
        SPAWN_RATE * self.domain.area()
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let dt = rng::exp(rng, self.spawn_rate() + self.ensemble.len() as f64);
        self.s_time += dt;
        dt
    }

    pub fn apply_event<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<BdEvent> {
        let spawn = self.spawn_rate();
        let u = rng.random::<f64>() * (spawn + self.ensemble.len() as f64);
        if u < spawn {
            self.counters.spawns += 1;
            match contour_birth_sampler(&self.domain, self.beta, rng)? {
                None => Ok(BdEvent::Thinned),
                Some((c, _)) => {
                    if self.exclusion && !self.ensemble.is_disjoint_from(&c) {
                        self.counters.rejected += 1;
                        Ok(BdEvent::Rejected)
                    } else {
                        self.counters.births += 1;
                        self.ensemble.contours.push(c);
                        Ok(BdEvent::Born)
                    }
                }
            }
        } else {
            let k = rng.random_range(0..self.ensemble.len());
            self.ensemble.contours.swap_remove(k);
            self.counters.deaths += 1;
            Ok(BdEvent::Died)
        }
    }
}

/// One event of the dynamics: advance the clock and resolve it.
pub fn bd_step<R: Rng + ?Sized>(state: &mut BdState, rng: &mut R) -> Result<BdEvent> {
    state.advance(rng);
    state.apply_event(rng)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 2.0) || !beta.is_finite() {
        return Err(Error::Regime(format!("contour dynamics need beta >= 2, got {beta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSnapshot {
    pub s_time: f64,
    pub ensemble: ContourEnsemble,
}

/// Runs the dynamics from `initial` and records snapshots on the schedule.
pub fn run_bd<R: Rng + ?Sized>(
    mut state: BdState,
    schedule: ChainSchedule,
    rng: &mut R,
) -> Result<(Vec<EnsembleSnapshot>, BdState)> {
    if !(schedule.horizon > 0.0) || !(schedule.thin > 0.0) {
        return Err(Error::Parameter("horizon and thinning interval must be positive".into()));
    }
    let mut next = state.s_time + schedule.burn_in();
    let end = state.s_time + schedule.horizon;
    let mut out = Vec::new();
    loop {
        state.advance(rng);
        while next < state.s_time && next <= end {
            out.push(EnsembleSnapshot { s_time: next, ensemble: state.ensemble.clone() });
            next += schedule.thin;
        }
        if state.s_time > end {
            break;
        }
        state.apply_event(rng)?;
    }
    Ok((out, state))
}

/// Exact draw from the empty-boundary field: a Poisson contour process with
/// intensity `Theta^[beta]_D`, resampled until pairwise disjoint.
pub fn rejection_sample_conditioned_poisson<R: Rng + ?Sized>(
    domain: &ConvexDomain,
    beta: f64,
    rng: &mut R,
    max_tries: usize,
) -> Result<(ContourEnsemble, usize)> {
    check_beta(beta)?;
    for t in 1..=max_tries {
        let cs = poisson_contours(domain, beta, rng)?;
        if pairwise_disjoint(&cs) {
            return Ok((ContourEnsemble { contours: cs }, t));
        }
    }
    Err(Error::RetryBudget(max_tries))
}

/// Count law of the dynamics without the disjointness test, compared with a
/// target mass: Poisson with that mean if the birth sampler is right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropoutReport {
    pub counts: Dispersion,
    pub target_se: f64,
    /// `(mean - target) / sqrt(se_mean^2 + target_se^2)`.
    pub mean_z: f64,
    pub rejected_births: u64,
}

impl DropoutReport {
    pub fn passes(&self, k: f64) -> bool {
        self.mean_z.abs() <= k && self.counts.variance_z().abs() <= k && self.rejected_births == 0
    }
}

pub fn dropout_comparison<R: Rng + ?Sized>(
    domain: &ConvexDomain,
    beta: f64,
    schedule: ChainSchedule,
    target: f64,
    target_se: f64,
    rng: &mut R,
) -> Result<DropoutReport> {
    let state = BdState::new(domain.clone(), beta)?.without_exclusion();
    let (snaps, end) = run_bd(state, schedule, rng)?;
    if snaps.len() < 2 {
        return Err(Error::Budget { needed: 2, got: snaps.len() });
    }
    let counts: Vec<f64> = snaps.iter().map(|s| s.ensemble.len() as f64).collect();
    let d = poisson_dispersion(&counts, target);
    let mean_z = (d.mean - target) / d.se_mean.hypot(target_se);
    Ok(DropoutReport { counts: d, target_se, mean_z, rejected_births: end.counters.rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::rng::stream;

    fn sq(x0: f64, y0: f64, s: f64) -> Contour {
        Contour::new(
            vec![Point::new(x0, y0), Point::new(x0 + s, y0), Point::new(x0 + s, y0 + s), Point::new(x0, y0 + s)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn ensemble_rejects_intersections() {
        assert!(ContourEnsemble::new(vec![sq(0.0, 0.0, 1.0), sq(0.5, 0.5, 1.0)]).is_err());
        let e = ContourEnsemble::new(vec![sq(0.0, 0.0, 1.0), sq(0.2, 0.2, 0.5)]).unwrap();
        assert!(!e.is_disjoint_from(&sq(0.9, 0.9, 0.5)));
        assert!(e.is_disjoint_from(&sq(3.0, 3.0, 0.5)));
        assert_eq!(e.to_configuration().edges.len(), 8);
    }

    #[test]
    fn regime_is_enforced() {
        let d = ConvexDomain::disk(Point::ORIGIN, 1.0).unwrap();
        assert!(matches!(BdState::new(d.clone(), 1.9), Err(Error::Regime(_))));
        assert!(matches!(rejection_sample_conditioned_poisson(&d, 1.0, &mut stream(1, &[]), 5), Err(Error::Regime(_))));
    }

    #[test]
    fn ensembles_stay_disjoint() {
        let d = ConvexDomain::disk(Point::ORIGIN, 1.5).unwrap();
        let mut r = stream(2, &[]);
        let mut st = BdState::new(d, 2.0).unwrap();
        let mut births = 0;
        for _ in 0..20_000 {
            if bd_step(&mut st, &mut r).unwrap() == BdEvent::Born {
                births += 1;
            }
            assert!(pairwise_disjoint(&st.ensemble.contours));
        }
        assert!(births > 10);
        assert!(st.counters.rejected > 0);
    }

    #[test]
    fn rejection_sampler_output_is_disjoint_and_budget_is_reported() {
        let d = ConvexDomain::disk(Point::ORIGIN, 1.5).unwrap();
        let mut r = stream(3, &[]);
        for _ in 0..50 {
            let (e, tries) = rejection_sample_conditioned_poisson(&d, 2.0, &mut r, 1000).unwrap();
            assert!(tries >= 1);
            assert!(pairwise_disjoint(&e.contours));
        }
        assert!(matches!(rejection_sample_conditioned_poisson(&d, 2.0, &mut r, 0), Err(Error::RetryBudget(0))));
        // thousands of contours: some pair meets on every attempt
        let big = ConvexDomain::square(25.0).unwrap();
        assert!(matches!(rejection_sample_conditioned_poisson(&big, 2.0, &mut r, 2), Err(Error::RetryBudget(2))));
    }

    #[test]
    fn empty_ensemble_without_births_stays_empty() {
        let d = ConvexDomain::disk(Point::ORIGIN, 0.5).unwrap();
        let mut r = stream(4, &[]);
        let mut st = BdState::new(d, 50.0).unwrap();
        for _ in 0..200 {
            assert_eq!(bd_step(&mut st, &mut r).unwrap(), BdEvent::Thinned);
            assert!(st.ensemble.is_empty());
        }
    }
}
