//! Graphical construction of the contour dynamics.
//!
//! A stationary free process of contour instances `theta x [s0, s1)` is built
//! backwards from `s = 0` inside a truncation region `G`: the instances alive
//! at 0 form a Poisson contour process with `Exp(1)` ages and residual lives,
//! and earlier instances are generated lazily in blocks of death time, each
//! with an `Exp(1)` age. An instance's ancestors are the instances alive at
//! its birth that meet it; it is accepted iff no ancestor is accepted, which
//! is resolved over its finite clan of ancestors in birth order.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contour::{contour_birth_sampler, poisson_contours, Contour, SPAWN_RATE};
use crate::contour_bd::ContourEnsemble;
use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::rng::{self, stream, tag};

/// Default cap on clan sizes.
/// Contour parameter used when none is given; the process is subcritical for `beta > 2`.
pub const DEFAULT_BETA: f64 = 6.0;

pub const DEFAULT_CLAN_CAP: usize = 10_000;

/// Default bound on the birth mass ignored by the spatial truncation.
pub const DEFAULT_TAIL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourInstance {
    pub id: u64,
    pub contour: Contour,
    pub birth: f64,
    pub death: f64,
}

impl ContourInstance {
    pub fn alive_at(&self, s: f64) -> bool {
        self.birth <= s && s < self.death
    }

    /// Birth order with ids breaking ties.
    fn precedes(&self, o: &ContourInstance) -> bool {
        (self.birth, self.id) < (o.birth, o.id)
    }

    /// Whether `self` is an ancestor of `o`.
    pub fn is_ancestor_of(&self, o: &ContourInstance) -> bool {
        self.id != o.id && self.precedes(o) && self.death > o.birth && self.contour.intersects(&o.contour)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 2.0) || !beta.is_finite() {
        return Err(Error::Regime(format!("the graphical construction needs beta >= 2, got {beta}")));
    }
    Ok(())
}

/// Bound on the tilted birth mass, per unit s-time, of contours that meet
/// `window` and have a vertex farther than `r` from it.
///
/// Such a contour has length above `2 max(r, d(x))` for each of its vertices
/// `x`, and the per-vertex tail `4 pi e^{-(beta - 2) len}` integrates in closed
/// form over parallel bodies of the convex window.
pub fn truncation_tail_bound(window: &ConvexDomain, beta: f64, r: f64) -> Result<f64> {
    if !(beta > 2.0) {
        return Err(Error::Regime(format!("spatial truncation needs beta > 2, got {beta}")));
    }
    let c = 2.0 * (beta - 2.0);
    let (a, p) = (window.area(), window.perimeter());
    let pi = std::f64::consts::PI;
    let near = a + p * r + pi * r * r;
    let far = (p + 2.0 * pi * r) / c + 2.0 * pi / (c * c);
    Ok(4.0 * pi * (-c * r).exp() * (near + far))
}

/// Smallest truncation radius, on a grid of 0.05, with tail bound below `tail`.
pub fn truncation_radius(window: &ConvexDomain, beta: f64, tail: f64) -> Result<f64> {
    if !(tail > 0.0) {
        return Err(Error::Parameter(format!("tail bound must be positive, got {tail}")));
    }
    let mut r = 0.0;
    while truncation_tail_bound(window, beta, r)? >= tail {
        r += 0.05;
        if r > 1e4 {
            return Err(Error::Regime("no truncation radius reaches the requested tail".into()));
        }
    }
    Ok(r)
}

/// The stationary free process in a region, generated backwards in s-time.
#[derive(Debug, Clone)]
pub struct FreeProcess {
    region: ConvexDomain,
    beta: f64,
    seed: u64,
    block_len: f64,
    blocks: u64,
    instances: Vec<ContourInstance>,
}

impl FreeProcess {
    /// Draws the instances alive at `s = 0`.
    pub fn stationary(region: ConvexDomain, beta: f64, seed: u64) -> Result<Self> {
        region.validate()?;
        check_beta(beta)?;
        let mut r = stream(seed, &[tag::FREE_TOP]);
        let contours = poisson_contours(&region, beta, &mut r)?;
        let instances = contours
            .into_iter()
            .enumerate()
            .map(|(i, contour)| {
                let age = rng::exp(&mut r, 1.0);
                let rest = rng::exp(&mut r, 1.0);
                ContourInstance { id: i as u64, contour, birth: -age, death: rest }
            })
            .collect();
        Ok(FreeProcess { region, beta, seed, block_len: 1.0, blocks: 0, instances })
    }

    pub fn region(&self) -> &ConvexDomain {
        &self.region
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn instances(&self) -> &[ContourInstance] {
        &self.instances
    }

    /// Earliest death time covered so far.
    pub fn horizon(&self) -> f64 {
        -(self.blocks as f64) * self.block_len
    }

    /// Generates death-time blocks until every instance dying after `s` exists.
    pub fn extend_back(&mut self, s: f64) -> Result<()> {
        while self.horizon() > s {
            let k = self.blocks;
            let mut r = stream(self.seed, &[tag::FREE_BLOCK, k]);
            let n = rng::poisson(&mut r, SPAWN_RATE * self.region.area() * self.block_len);
            let top = -(k as f64) * self.block_len;
            let mut idx = 0u64;
            for _ in 0..n {
                let death = top - self.block_len * r.random::<f64>();
                if let Some((contour, _)) = contour_birth_sampler(&self.region, self.beta, &mut r)? {
                    let age = rng::exp(&mut r, 1.0);
                    let id = ((k + 1) << 32) | idx;
                    idx += 1;
                    self.instances.push(ContourInstance { id, contour, birth: death - age, death });
                }
            }
            self.blocks += 1;
        }
        Ok(())
    }

    /// Free instances alive at `s <= 0` (after extending far enough back).
    pub fn alive_at(&mut self, s: f64) -> Result<Vec<&ContourInstance>> {
        self.extend_back(s)?;
        Ok(self.instances.iter().filter(|i| i.alive_at(s)).collect())
    }

    fn index_of(&self, id: u64) -> Option<usize> {
        self.instances.iter().position(|i| i.id == id)
    }

    /// Indices of the ancestors of instance `k` among those passing `keep`.
    fn ancestor_indices(&mut self, k: usize, keep: &dyn Fn(&ContourInstance) -> bool) -> Result<Vec<usize>> {
        let birth = self.instances[k].birth;
        self.extend_back(birth)?;
        let me = &self.instances[k];
        Ok((0..self.instances.len())
            .filter(|&j| keep(&self.instances[j]) && self.instances[j].is_ancestor_of(me))
            .collect())
    }

    /// Ancestors of an instance, by id.
    pub fn ancestors(&mut self, id: u64) -> Result<Vec<u64>> {
        let k = self.index_of(id).ok_or_else(|| Error::Parameter(format!("no instance {id}")))?;
        let a = self.ancestor_indices(k, &|_| true)?;
        Ok(a.into_iter().map(|j| self.instances[j].id).collect())
    }
}

/// A resolved clan of ancestors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AncestorClan {
    pub root: u64,
    /// Members in birth order, the root last.
    pub members: Vec<u64>,
    /// Ancestor links `(descendant, ancestor)`.
    pub links: Vec<(u64, u64)>,
    pub accepted: HashMap<u64, bool>,
}

impl AncestorClan {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn root_accepted(&self) -> bool {
        self.accepted[&self.root]
    }
}

/// Resolves acceptance statuses on a (possibly restricted) free process.
/// Statuses are a pure function of the free process and the restriction.
pub struct Resolver {
    keep: Box<dyn Fn(&ContourInstance) -> bool + Send + Sync>,
    status: HashMap<u64, bool>,
    pub cap: usize,
}

impl Resolver {
    pub fn new(cap: usize) -> Self {
        Resolver { keep: Box::new(|_| true), status: HashMap::new(), cap }
    }

    /// Finite-volume construction: only instances inside `domain` without
    /// boundary contact take part.
    pub fn restricted(cap: usize, domain: ConvexDomain) -> Self {
        let eps = domain.eps();
        Resolver {
            keep: Box::new(move |i: &ContourInstance| {
                i.contour.vertices().iter().all(|&p| domain.boundary_distance(p) > eps)
            }),
            status: HashMap::new(),
            cap,
        }
    }

    pub fn admits(&self, i: &ContourInstance) -> bool {
        (self.keep)(i)
    }

    pub fn resolve_clan(&mut self, fp: &mut FreeProcess, root: u64) -> Result<AncestorClan> {
        let r = fp.index_of(root).ok_or_else(|| Error::Parameter(format!("no instance {root}")))?;
        if !self.admits(&fp.instances[r]) {
            return Err(Error::Parameter(format!("instance {root} is outside the restriction")));
        }
        let mut seen: HashSet<usize> = HashSet::from([r]);
        let mut stack = vec![r];
        let mut links = Vec::new();
        let mut parents: HashMap<usize, Vec<usize>> = HashMap::new();
        while let Some(k) = stack.pop() {
            let anc = fp.ancestor_indices(k, &*self.keep)?;
            for &a in &anc {
                links.push((fp.instances[k].id, fp.instances[a].id));
                if seen.insert(a) {
                    if seen.len() > self.cap {
                        return Err(Error::ClanCap { cap: self.cap });
                    }
                    stack.push(a);
                }
            }
            parents.insert(k, anc);
        }
        let mut order: Vec<usize> = seen.into_iter().collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (&fp.instances[a], &fp.instances[b]);
            x.birth.total_cmp(&y.birth).then(x.id.cmp(&y.id))
        });
        let mut accepted = HashMap::new();
        for &k in &order {
            let id = fp.instances[k].id;
            let ok = match self.status.get(&id) {
                Some(&v) => v,
                None => !parents[&k].iter().any(|a| accepted[&fp.instances[*a].id]),
            };
            self.status.insert(id, ok);
            accepted.insert(id, ok);
        }
        Ok(AncestorClan { root, members: order.iter().map(|&k| fp.instances[k].id).collect(), links, accepted })
    }
}

/// Settings for perfect sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfectCaps {
    pub clan_cap: usize,
    pub tail: f64,
}

impl Default for PerfectCaps {
    fn default() -> Self {
        PerfectCaps { clan_cap: DEFAULT_CLAN_CAP, tail: DEFAULT_TAIL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfectSample {
    /// Accepted contours alive at 0 meeting the window.
    pub ensemble: ContourEnsemble,
    /// Free contours alive at 0 meeting the window.
    pub free: Vec<Contour>,
    pub accepted_ids: Vec<u64>,
    pub free_ids: Vec<u64>,
    /// Sizes of the clans of every instance alive at 0 in the region.
    pub clan_sizes: Vec<usize>,
    pub r_max: f64,
    pub tail_bound: f64,
}

/// Exact window draw from the stationary law, up to the reported truncation.
pub fn perfect_sample(window: &ConvexDomain, beta: f64, seed: u64, caps: PerfectCaps) -> Result<PerfectSample> {
    window.validate()?;
    check_beta(beta)?;
    let r_max = truncation_radius(window, beta, caps.tail)?;
    let tail_bound = truncation_tail_bound(window, beta, r_max)?;
    let region = window.dilated_box(r_max);
    let mut fp = FreeProcess::stationary(region, beta, seed)?;
    let mut res = Resolver::new(caps.clan_cap);
    let roots: Vec<u64> = fp.instances.iter().filter(|i| i.alive_at(0.0)).map(|i| i.id).collect();
    let mut out = PerfectSample {
        ensemble: ContourEnsemble::default(),
        free: Vec::new(),
        accepted_ids: Vec::new(),
        free_ids: Vec::new(),
        clan_sizes: Vec::new(),
        r_max,
        tail_bound,
    };
    for id in roots {
        let clan = res.resolve_clan(&mut fp, id)?;
        out.clan_sizes.push(clan.size());
        let inst = &fp.instances[fp.index_of(id).unwrap()];
        if inst.contour.meets(window) {
            out.free.push(inst.contour.clone());
            out.free_ids.push(id);
            if clan.root_accepted() {
                out.ensemble.contours.push(inst.contour.clone());
                out.accepted_ids.push(id);
            }
        }
    }
    Ok(out)
}

/// Accepted and free alive sets at one s-time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledSnapshot {
    pub s_time: f64,
    pub free_ids: Vec<u64>,
    pub accepted_ids: Vec<u64>,
}

impl CoupledSnapshot {
    pub fn dominated(&self) -> bool {
        self.accepted_ids.iter().all(|a| self.free_ids.contains(a))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub instances: Vec<ContourInstance>,
    pub accepted: Vec<bool>,
    pub snapshots: Vec<CoupledSnapshot>,
}

impl Trajectory {
    /// Accepted contours alive at `s`.
    pub fn ensemble_at(&self, s: f64) -> ContourEnsemble {
        ContourEnsemble {
            contours: self
                .instances
                .iter()
                .zip(&self.accepted)
                .filter(|(i, &a)| a && i.alive_at(s))
                .map(|(i, _)| i.contour.clone())
                .collect(),
        }
    }
}

/// Forward construction from an initial ensemble at `s = 0`: the free process
/// is restarted empty, births in `(0, horizon]` are accepted iff no accepted
/// instance alive at their birth meets them.
pub fn initial_condition_process<R: Rng + ?Sized>(
    initial: &ContourEnsemble,
    domain: &ConvexDomain,
    beta: f64,
    horizon: f64,
    sample_times: &[f64],
    rng: &mut R,
) -> Result<Trajectory> {
    check_beta(beta)?;
    domain.validate()?;
    if !crate::contour::pairwise_disjoint(&initial.contours) {
        return Err(Error::Admissibility("initial contours intersect".into()));
    }
    let mut instances: Vec<ContourInstance> = initial
        .contours
        .iter()
        .enumerate()
        .map(|(i, c)| ContourInstance { id: i as u64, contour: c.clone(), birth: 0.0, death: rng::exp(rng, 1.0) })
        .collect();
    let n0 = instances.len();
    let n = rng::poisson(rng, SPAWN_RATE * domain.area() * horizon);
    let mut births: Vec<f64> = (0..n).map(|_| horizon * rng.random::<f64>()).collect();
    births.sort_by(f64::total_cmp);
    for s in births {
        if let Some((contour, _)) = contour_birth_sampler(domain, beta, rng)? {
            let id = instances.len() as u64;
            instances.push(ContourInstance { id, contour, birth: s, death: s + rng::exp(rng, 1.0) });
        }
    }
    // birth order is index order; ancestors never reach below s = 0
    let mut accepted = vec![true; instances.len()];
    for k in n0..instances.len() {
        let me = &instances[k];
        accepted[k] = !(0..k).any(|j| accepted[j] && instances[j].is_ancestor_of(me));
    }
    let snapshots = sample_times
        .iter()
        .map(|&s| CoupledSnapshot {
            s_time: s,
            free_ids: instances.iter().filter(|i| i.alive_at(s)).map(|i| i.id).collect(),
            accepted_ids: instances
                .iter()
                .zip(&accepted)
                .filter(|(i, &a)| a && i.alive_at(s))
                .map(|(i, _)| i.id)
                .collect(),
        })
        .collect();
    Ok(Trajectory { instances, accepted, snapshots })
}

/// Window disagreement between finite-volume constructions on shared randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledVolumesReport {
    pub distances: Vec<f64>,
    /// Replicas in which the window ensembles of the inner domain at each
    /// distance and of the outer domain differ.
    pub disagreements: Vec<u64>,
    /// Replicas per distance, including those lost to the clan cap.
    pub replicas: u64,
    pub clan_cap_failures: u64,
}

impl CoupledVolumesReport {
    pub fn frequencies(&self) -> Vec<f64> {
        self.disagreements.iter().map(|&d| d as f64 / self.replicas.max(1) as f64).collect()
    }
}

fn window_ids(fp: &mut FreeProcess, res: &mut Resolver, window: &ConvexDomain) -> Result<Vec<u64>> {
    let roots: Vec<u64> = fp
        .instances
        .iter()
        .filter(|i| i.alive_at(0.0) && res.admits(i) && i.contour.meets(window))
        .map(|i| i.id)
        .collect();
    let mut ids = Vec::new();
    for id in roots {
        if res.resolve_clan(fp, id)?.root_accepted() {
            ids.push(id);
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

/// For each distance `d`, compares the window ensemble of `outer` with that
/// of `window` dilated by `d`, both built on one shared free process in
/// `outer`. Every (replica, distance) pair draws its own free process, so the
/// disagreement counts at different distances are independent.
pub fn coupled_volumes(
    outer: &ConvexDomain,
    window: &ConvexDomain,
    distances: &[f64],
    beta: f64,
    replicas: u64,
    seed: u64,
    clan_cap: usize,
) -> Result<CoupledVolumesReport> {
    let mut report = CoupledVolumesReport {
        distances: distances.to_vec(),
        disagreements: vec![0; distances.len()],
        replicas,
        clan_cap_failures: 0,
    };
    for (i, &d) in distances.iter().enumerate() {
        let inner = window.dilated_box(d);
        for k in 0..replicas {
            let mut fp =
                FreeProcess::stationary(outer.clone(), beta, rng::subseed(seed, &[tag::REPLICA, i as u64, k]))?;
            let base = window_ids(&mut fp, &mut Resolver::restricted(clan_cap, outer.clone()), window);
            let other = window_ids(&mut fp, &mut Resolver::restricted(clan_cap, inner.clone()), window);
            match (base, other) {
                (Ok(a), Ok(b)) => report.disagreements[i] += u64::from(a != b),
                (Err(Error::ClanCap { .. }), _) | (_, Err(Error::ClanCap { .. })) => report.clan_cap_failures += 1,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
    }
    Ok(report)
}

/// Covariance of window occupancy indicators at separations `d` along the
/// x-axis, from perfect samples of the union of the windows.
pub fn occupancy_covariance(
    side: f64,
    separations: &[f64],
    beta: f64,
    replicas: u64,
    seed: u64,
    caps: PerfectCaps,
) -> Result<Vec<(f64, f64, f64)>> {
    use crate::geometry::Point;
    let h = 0.5 * side;
    let far = separations.iter().cloned().fold(0.0, f64::max);
    let hull = ConvexDomain::rect(Point::new(-h, -h), Point::new(far + h, h))?;
    let windows: Vec<ConvexDomain> = separations
        .iter()
        .map(|&d| ConvexDomain::rect(Point::new(d - h, -h), Point::new(d + h, h)))
        .collect::<Result<_>>()?;
    let base = ConvexDomain::rect(Point::new(-h, -h), Point::new(h, h))?;
    let mut x0 = Vec::new();
    let mut xd = vec![Vec::new(); separations.len()];
    for k in 0..replicas {
        let s = perfect_sample(&hull, beta, rng::subseed(seed, &[tag::REPLICA, k]), caps)?;
        x0.push(f64::from(u8::from(s.ensemble.contours.iter().any(|c| c.meets(&base)))));
        for (w, col) in windows.iter().zip(xd.iter_mut()) {
            col.push(f64::from(u8::from(s.ensemble.contours.iter().any(|c| c.meets(w)))));
        }
    }
    let m0 = crate::stats::mean(&x0);
    let n = x0.len() as f64;
    Ok(separations
        .iter()
        .zip(&xd)
        .map(|(&d, col)| {
            let md = crate::stats::mean(col);
            let prods: Vec<f64> = x0.iter().zip(col).map(|(a, b)| (a - m0) * (b - md)).collect();
            let cov = prods.iter().sum::<f64>() / (n - 1.0);
            let se = (crate::stats::variance(&prods) / n).sqrt();
            (d, cov, se)
        })
        .collect())
}
