//! Disagreement-loop birth and death chains.
//!
//! The state is an evolution log. Births arrive at rate `pi A(D) + M`
//! (interior sites plus boundary entries of invariant lines), each site dies
//! at rate 1, and every proposal is traced through its disagreement loop.
//! With all couplings zero every proposal is accepted and the traced field
//! is stationary Arak; otherwise the loop is accepted with the filtered
//! probability `exp(-alpha A(B' \ B) - beta L(new \ old) - a A(B' xor B) - b L(xor))`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arak::{boundary_birth_from_line, EvolutionLog, SiteDraw};
use crate::disagreement::{insert_birth, remove_birth, trace_loop, DisagreementLoop, Update};
use crate::error::{Error, Result};
use crate::geometry::{parity_area, ConvexDomain, PolygonalConfiguration};
use crate::gibbs::{black_area, boundary_condition, BoundaryCondition, ColouredConfiguration, ModelParams};
use crate::rng;

/// Area and length terms of one proposal.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LoopTerms {
    /// `A(black' \ black)`.
    pub area_new_black: f64,
    /// `length(new \ old)`.
    pub length_new: f64,
    /// `A(black' xor black)`.
    pub area_sym: f64,
    /// `length(new xor old)`.
    pub length_sym: f64,
}

/// The filtered acceptance probability. Births and deaths share this path.
pub fn acceptance_from_terms(t: &LoopTerms, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let main = -params.alpha * t.area_new_black - params.beta * t.length_new;
    let aux = -params.a * t.area_sym - params.b * t.length_sym;
    let p = (main + aux).exp();
    if !(p > 0.0) {
        return Ok(0.0);
    }
    Ok(p.min(1.0))
}

/// Area of the region where the two colourings differ.
pub fn symmetric_black_area(
    old: &ColouredConfiguration,
    new: &ColouredConfiguration,
    lp: &DisagreementLoop,
    domain: &ConvexDomain,
) -> Result<f64> {
    let segs: Vec<_> = lp.segments().map(|s| (s.a, s.b)).collect();
    let odd = parity_area(domain, &segs)?;
    Ok(if old.flip == new.flip { odd } else { domain.area() - odd })
}

/// Computes the proposal terms; areas only when some area coupling is
/// nonzero. `old_black` and `new_black` may be supplied to skip recomputation.
pub fn loop_terms(
    old: &ColouredConfiguration,
    new: &ColouredConfiguration,
    lp: &DisagreementLoop,
    params: &ModelParams,
    domain: &ConvexDomain,
    old_black: Option<f64>,
) -> Result<(LoopTerms, Option<f64>)> {
    let mut t = LoopTerms { length_new: lp.positive_length(), length_sym: lp.length(), ..Default::default() };
    let mut new_black = None;
    if params.alpha != 0.0 || params.a != 0.0 {
        t.area_sym = symmetric_black_area(old, new, lp, domain)?;
    }
    if params.alpha != 0.0 {
        let ob = match old_black {
            Some(v) => v,
            None => black_area(old, domain)?,
        };
        let nb = black_area(new, domain)?;
        t.area_new_black = (0.5 * (nb - ob + t.area_sym)).max(0.0);
        new_black = Some(nb);
    }
    Ok((t, new_black))
}

/// Acceptance probability of replacing `old` by `proposal`.
pub fn acceptance_probability(
    old: &ColouredConfiguration,
    proposal: &ColouredConfiguration,
    params: &ModelParams,
    domain: &ConvexDomain,
) -> Result<f64> {
    params.validate()?;
    let lp = trace_loop(&old.base, &proposal.base, domain)?;
    let (t, _) = loop_terms(old, proposal, &lp, params, domain, None)?;
    acceptance_from_terms(&t, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    Birth,
    Death,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    /// Rejected by the Metropolis filter.
    Filtered,
    /// The proposal violates the boundary condition.
    Boundary,
    /// A measure-zero degeneracy in the proposal; treated as a rejection.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainCounters {
    pub births_proposed: u64,
    pub births_accepted: u64,
    pub deaths_proposed: u64,
    pub deaths_accepted: u64,
    pub boundary_rejections: u64,
    pub degenerate: u64,
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub log: EvolutionLog,
    pub cfg: ColouredConfiguration,
    pub s_time: f64,
    pub params: ModelParams,
    pub bd: BoundaryCondition,
    pub counters: ChainCounters,
    black: Option<f64>,
}

impl ChainState {
    /// The empty state, coloured per the boundary condition (or at random).
    pub fn new<R: Rng + ?Sized>(
        domain: ConvexDomain,
        params: ModelParams,
        bd: BoundaryCondition,
        rng: &mut R,
    ) -> Result<Self> {
        domain.validate()?;
        params.validate()?;
        let log = EvolutionLog::new(domain, rng.random());
        let flip = choose_flip(bd, rng);
        Ok(ChainState {
            log,
            cfg: ColouredConfiguration::new(PolygonalConfiguration::empty(), flip),
            s_time: 0.0,
            params,
            bd,
            counters: ChainCounters::default(),
            black: None,
        })
    }

    pub fn domain(&self) -> &ConvexDomain {
        self.log.domain()
    }

    fn birth_rate(&self) -> (f64, f64) {
        let d = self.domain();
        (PI * d.area(), d.perimeter())
    }

    pub fn total_rate(&self) -> f64 {
        let (a, m) = self.birth_rate();
        a + m + self.log.len() as f64
    }

    /// Advances the clock by the next waiting time and returns it.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let dt = rng::exp(rng, self.total_rate());
        self.s_time += dt;
        dt
    }

    /// Draws and resolves one birth or death proposal without moving the clock.
    pub fn apply_event<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(Move, Outcome)> {
        let (ra, rm) = self.birth_rate();
        let u = rng.random::<f64>() * self.total_rate();
        let flip = choose_flip(self.bd, rng);
        if u < ra + rm {
            self.counters.births_proposed += 1;
            let site = if u < ra {
                SiteDraw::Interior(self.domain().sample_interior(rng))
            } else {
                let line = self.domain().sample_hitting_line(rng);
                match boundary_birth_from_line(self.domain(), &line) {
                    Some(s) => s,
                    None => {
                        self.counters.degenerate += 1;
                        return Ok((Move::Birth, Outcome::Degenerate));
                    }
                }
            };
            if self.bd != BoundaryCondition::None && matches!(site, SiteDraw::Boundary { .. }) {
                self.counters.boundary_rejections += 1;
                return Ok((Move::Birth, Outcome::Boundary));
            }
            let up = insert_birth(&self.log, &self.cfg.base, site);
            let out = self.resolve(up, flip, rng)?;
            if out == Outcome::Accepted {
                self.counters.births_accepted += 1;
            }
            Ok((Move::Birth, out))
        } else {
            self.counters.deaths_proposed += 1;
            let k = rng.random_range(0..self.log.len());
            let id = self.log.ids().nth(k).expect("index in range");
            let up = remove_birth(&self.log, &self.cfg.base, id);
            let out = self.resolve(up, flip, rng)?;
            if out == Outcome::Accepted {
                self.counters.deaths_accepted += 1;
                self.log.clear_archive();
            }
            Ok((Move::Death, out))
        }
    }

    fn resolve<R: Rng + ?Sized>(&mut self, up: Result<Update>, flip: bool, rng: &mut R) -> Result<Outcome> {
        let up = match up {
            Ok(u) => u,
            Err(Error::Consistency(_)) | Err(Error::Parameter(_)) => {
                self.counters.degenerate += 1;
                return Ok(Outcome::Degenerate);
            }
            Err(e) => return Err(e),
        };
        let proposal = ColouredConfiguration::new(up.config, flip);
        let domain = self.log.domain().clone();
        if !boundary_condition(&proposal, &domain, self.bd) {
            self.counters.boundary_rejections += 1;
            return Ok(Outcome::Boundary);
        }
        let terms = loop_terms(&self.cfg, &proposal, &up.disagreement, &self.params, &domain, self.black);
        let (terms, new_black) = match terms {
            Ok(t) => t,
            Err(Error::Consistency(_)) => {
                self.counters.degenerate += 1;
                return Ok(Outcome::Degenerate);
            }
            Err(e) => return Err(e),
        };
        let p = acceptance_from_terms(&terms, &self.params)?;
        if p >= 1.0 || rng.random::<f64>() < p {
            self.log = up.log;
            self.cfg = proposal;
            self.black = new_black;
            Ok(Outcome::Accepted)
        } else {
            Ok(Outcome::Filtered)
        }
    }

    /// One event: advance the clock, then resolve the proposal.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(Move, Outcome)> {
        self.advance(rng);
        self.apply_event(rng)
    }
}

fn choose_flip<R: Rng + ?Sized>(bd: BoundaryCondition, rng: &mut R) -> bool {
    match bd {
        BoundaryCondition::Black => false,
        BoundaryCondition::White => true,
        BoundaryCondition::None | BoundaryCondition::Empty => rng.random(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub s_time: f64,
    pub cfg: ColouredConfiguration,
}

/// Settings for [`run_chain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSchedule {
    pub horizon: f64,
    pub thin: f64,
    /// Defaults to a fifth of the horizon.
    pub burn_in: Option<f64>,
}

impl ChainSchedule {
    pub fn new(horizon: f64, thin: f64) -> Self {
        ChainSchedule { horizon, thin, burn_in: None }
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in.unwrap_or(self.horizon / 5.0)
    }
}

/// Runs a chain from the empty state and records the state at s-times
/// `burn_in, burn_in + thin, ...` up to the horizon.
pub fn run_chain<R: Rng + ?Sized>(
    domain: &ConvexDomain,
    params: ModelParams,
    bd: BoundaryCondition,
    schedule: ChainSchedule,
    rng: &mut R,
) -> Result<(Vec<Snapshot>, ChainCounters)> {
    if !(schedule.horizon > 0.0) || !(schedule.thin > 0.0) {
        return Err(Error::Parameter("horizon and thinning interval must be positive".into()));
    }
    let mut state = ChainState::new(domain.clone(), params, bd, rng)?;
    let mut next = schedule.burn_in();
    let mut out = Vec::new();
    loop {
        state.advance(rng);
        while next < state.s_time && next <= schedule.horizon {
            out.push(Snapshot { s_time: next, cfg: state.cfg.clone() });
            next += schedule.thin;
        }
        if state.s_time > schedule.horizon {
            break;
        }
        state.apply_event(rng)?;
    }
    Ok((out, state.counters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{check_admissible, Point, Segment};
    use crate::gibbs::hamiltonian;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;

    fn square_contour() -> PolygonalConfiguration {
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        PolygonalConfiguration::new((0..4).map(|i| Segment::new(p[i], p[(i + 1) % 4])).collect())
    }

    #[test]
    fn zero_couplings_accept_everything() {
        let t = LoopTerms { area_new_black: 3.0, length_new: 2.0, area_sym: 5.0, length_sym: 7.0 };
        assert_eq!(acceptance_from_terms(&t, &ModelParams::default()).unwrap(), 1.0);
    }

    #[test]
    fn closed_square_with_new_black_interior() {
        let d = ConvexDomain::square(2.0).unwrap();
        let old = ColouredConfiguration::new(PolygonalConfiguration::empty(), true);
        let new = ColouredConfiguration::new(square_contour(), true);
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let acc = acceptance_probability(&old, &new, &p, &d).unwrap();
        assert_abs_diff_eq!(acc, (-5.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn auxiliary_area_term() {
        let t = LoopTerms { area_new_black: 0.0, length_new: 0.0, area_sym: 2.0, length_sym: 0.0 };
        let p = ModelParams::new(-1.0, 0.0, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(acceptance_from_terms(&t, &p).unwrap(), (-2.0f64).exp(), epsilon = 1e-15);
        let bad = ModelParams { alpha: -2.0, beta: 0.0, a: 1.0, b: 0.0 };
        assert!(acceptance_from_terms(&t, &bad).is_err());
    }

    #[test]
    fn identical_proposal_is_accepted() {
        let d = ConvexDomain::square(1.0).unwrap();
        let mut rng = stream(4, &[]);
        let (_, cfg) = crate::arak::sample_arak(&d, &mut rng).unwrap();
        let c = ColouredConfiguration::new(cfg, false);
        let p = ModelParams::new(0.5, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(acceptance_probability(&c, &c, &p, &d).unwrap(), 1.0);
    }

    #[test]
    fn loop_area_terms_match_full_hamiltonians() {
        // p(g -> d) / p(d -> g) = exp(-(H(d) - H(g))) on random single-site updates
        let d = ConvexDomain::square(1.0).unwrap();
        let mut rng = stream(6, &[]);
        let params = ModelParams::new(0.8, 0.6, 0.3, 0.2).unwrap();
        for k in 0..40 {
            let (log, cfg) = crate::arak::sample_arak(&d, &mut rng).unwrap();
            let x = d.sample_interior(&mut rng);
            let up = insert_birth(&log, &cfg, SiteDraw::Interior(x)).unwrap();
            let g = ColouredConfiguration::new(cfg, k % 2 == 0);
            let dl = ColouredConfiguration::new(up.config, k % 3 == 0);
            let fwd = acceptance_probability(&g, &dl, &params, &d).unwrap();
            let bwd = acceptance_probability(&dl, &g, &params, &d).unwrap();
            let dh = hamiltonian(&dl, &params, &d).unwrap() - hamiltonian(&g, &params, &d).unwrap();
            assert_abs_diff_eq!((fwd / bwd).ln(), -dh, epsilon = 1e-8);
        }
    }

    #[test]
    fn detailed_balance_by_flow_counting() {
        // frozen pair of states; Bernoulli acceptance counts estimate both probabilities
        let d = ConvexDomain::square(1.0).unwrap();
        let mut log = EvolutionLog::new(d.clone(), 17);
        log.add_site(SiteDraw::Interior(Point::new(-0.4, 0.1))).unwrap();
        let cfg = crate::arak::evolve(&log).unwrap();
        let up = insert_birth(&log, &cfg, SiteDraw::Interior(Point::new(0.2, -0.3))).unwrap();
        let g = ColouredConfiguration::new(cfg, false);
        let dl = ColouredConfiguration::new(up.config, true);
        let params = ModelParams::new(0.5, 0.4, 0.0, 0.0).unwrap();
        let p1 = acceptance_probability(&g, &dl, &params, &d).unwrap();
        let p2 = acceptance_probability(&dl, &g, &params, &d).unwrap();
        let mut rng = stream(18, &[]);
        let n = 100_000;
        let c1 = (0..n).filter(|_| rng.random::<f64>() < p1).count() as f64;
        let c2 = (0..n).filter(|_| rng.random::<f64>() < p2).count() as f64;
        let ratio = c1 / c2;
        let se = ratio * ((1.0 - p1) / c1 + (1.0 - p2) / c2).sqrt();
        let dh = hamiltonian(&dl, &params, &d).unwrap() - hamiltonian(&g, &params, &d).unwrap();
        assert!((ratio - (-dh).exp()).abs() < 3.0 * se + 1e-12, "{ratio} vs {}", (-dh).exp());
    }

    #[test]
    fn first_event_from_empty_is_a_birth_after_exponential_time() {
        let d = ConvexDomain::square(1.0).unwrap();
        let rate = PI * 4.0 + 8.0;
        let n = 4000;
        let mut total = 0.0;
        for s in 0..n {
            let mut rng = stream(20, &[s]);
            let mut st = ChainState::new(d.clone(), ModelParams::default(), BoundaryCondition::None, &mut rng).unwrap();
            let (mv, out) = st.step(&mut rng).unwrap();
            assert_eq!(mv, Move::Birth);
            assert!(matches!(out, Outcome::Accepted | Outcome::Degenerate));
            total += st.s_time;
        }
        let mean = total / n as f64;
        assert!((mean - 1.0 / rate).abs() < 3.0 / rate / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn empty_boundary_chain_never_touches_the_boundary() {
        let d = ConvexDomain::square(1.0).unwrap();
        let mut rng = stream(21, &[]);
        let params = ModelParams::new(0.0, 0.5, 0.0, 0.0).unwrap();
        let mut st = ChainState::new(d.clone(), params, BoundaryCondition::Black, &mut rng).unwrap();
        let mut saw_empty_black = 0;
        for _ in 0..3000 {
            st.step(&mut rng).unwrap();
            assert!(boundary_condition(&st.cfg, &d, BoundaryCondition::Black));
            assert_eq!(check_admissible(&st.cfg.base, &d), Ok(()));
            if st.cfg.base.is_empty() {
                saw_empty_black += 1;
            }
        }
        assert!(saw_empty_black > 0);
        assert!(st.counters.boundary_rejections > 0);
    }

    #[test]
    fn chain_is_reproducible() {
        let d = ConvexDomain::square(0.5).unwrap();
        let run = || {
            let mut rng = stream(22, &[]);
            run_chain(
                &d,
                ModelParams::new(0.3, 0.2, 0.0, 0.0).unwrap(),
                BoundaryCondition::None,
                ChainSchedule::new(10.0, 1.0),
                &mut rng,
            )
            .unwrap()
        };
        let (a, ca) = run();
        let (b, cb) = run();
        assert_eq!(a, b);
        assert_eq!(ca, cb);
        assert_eq!(a.len(), 9);
    }
}
