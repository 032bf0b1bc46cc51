//! The acceptance suite: ten checks, each reduced to a list of reports.
//!
//! Replicas fan out over the rayon pool. Every replica draws from its own
//! keyed stream, so results do not depend on the thread count.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    all_pass, clan_tail_fit, estimate_connective_constant, stats_extreme_vertices, stats_two_sampler, trend_test,
};
use super::{StatReport, Thresholds};
use crate::arak::{boundary_birth_from_line, sample_arak, SiteDraw};
use crate::contour::{theta_walk_estimate, Contour, VertexRule};
use crate::contour_bd::{rejection_sample_conditioned_poisson, run_bd, BdState, ContourEnsemble};
use crate::disagreement::{insert_birth, remove_birth, ClosureKind};
use crate::error::{Error, Result};
use crate::geometry::{mu_mass_hitting, ConvexDomain, Point, PolygonalConfiguration};
use crate::gibbs::{BoundaryCondition, ModelParams};
use crate::graphical::{coupled_volumes, initial_condition_process, perfect_sample, PerfectCaps};
use crate::metropolis::{run_chain, ChainSchedule};
use crate::rng::{stream, subseed, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub reports: Vec<StatReport>,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn pass(&self) -> bool {
        all_pass(&self.reports)
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {}: {} ({:.1} s)",
            self.id,
            if self.pass() { "PASS" } else { "FAIL" },
            self.title,
            self.seconds
        )
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "line measure mass equals perimeter"),
    (2, "extreme vertex counts are Poisson(pi A)"),
    (3, "disagreement loops are single curves and updates invert"),
    (4, "Metropolis at (0,0) matches the direct sampler"),
    (5, "contour dynamics match the conditioned Poisson law"),
    (6, "long contour mass obeys the exponential tail bound"),
    (7, "perfect window samples match a large finite domain"),
    (8, "accepted contours are dominated by free contours"),
    (9, "clan sizes have a decaying tail at beta = 6"),
    (10, "self-avoiding survival decays at a positive rate"),
];

/// Runs one criterion, timing it. Errors become a failing report.
pub fn run_criterion(id: u8, seed: u64, th: &Thresholds) -> CriterionOutcome {
    let title = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1).to_string();
    let t = Instant::now();
    let res = match id {
        1 => criterion_line_measure(th),
        2 => criterion_extreme_vertices(seed, th),
        3 => criterion_disagreement(seed),
        4 => criterion_metropolis(seed, th),
        5 => criterion_conditioned_poisson(seed, th),
        6 => criterion_length_tail(seed, th),
        7 => criterion_perfect_vs_finite(seed, th),
        8 => criterion_domination(seed),
        9 => criterion_clan_tail(seed, th),
        10 => criterion_connective(seed, th),
        _ => Err(Error::Parameter(format!("no criterion {id}"))),
    };
    let reports = res.unwrap_or_else(|e| vec![StatReport::new(format!("criterion_{id}_error"), e.to_string())]);
    CriterionOutcome { id, title, reports, seconds: t.elapsed().as_secs_f64() }
}

pub fn run_all(seed: u64, th: &Thresholds) -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|&(id, _)| run_criterion(id, seed, th)).collect()
}

fn criterion_seed(seed: u64, id: u8) -> u64 {
    subseed(seed, &[tag::REPLICA, 1000 + id as u64])
}

fn criterion_line_measure(_th: &Thresholds) -> Result<Vec<StatReport>> {
    let cases = [
        ("mu_mass_unit_disk", ConvexDomain::disk(Point::ORIGIN, 1.0)?, 2.0 * PI),
        ("mu_mass_square_side_2", ConvexDomain::square(1.0)?, 8.0),
    ];
    let mut out = Vec::new();
    for (name, d, want) in cases {
        let got = mu_mass_hitting(&d)?;
        let rel = (got - want).abs() / want;
        out.push(StatReport::new(name, "relative_error").estimate(rel, 0.0).judged(1e-9, rel <= 1e-9));
    }
    Ok(out)
}

fn criterion_extreme_vertices(seed: u64, th: &Thresholds) -> Result<Vec<StatReport>> {
    let s = criterion_seed(seed, 2);
    let d = ConvexDomain::square(2.0)?;
    let samples: Vec<PolygonalConfiguration> = (0..500u64)
        .into_par_iter()
        .map(|i| sample_arak(&d, &mut stream(s, &[i])).map(|(_, c)| c))
        .collect::<Result<_>>()?;
    stats_extreme_vertices(&samples, &d, th)
}

fn criterion_disagreement(seed: u64) -> Result<Vec<StatReport>> {
    let s = criterion_seed(seed, 3);
    let d = ConvexDomain::square(1.0)?;
    let mut rng = stream(s, &[]);
    let (mut log, mut cfg) = sample_arak(&d, &mut rng)?;
    let (mut ops, mut not_single, mut not_restored, mut errors) = (0u64, 0u64, 0u64, 0u64);
    while ops < 1000 {
        ops += 1;
        let ids: Vec<u64> = log.ids().collect();
        let insert = ids.is_empty() || rng.random::<f64>() < 0.5;
        let step = if insert {
            let site = if rng.random::<f64>() < 0.25 {
                match boundary_birth_from_line(&d, &d.sample_hitting_line(&mut rng)) {
                    Some(b) => b,
                    None => SiteDraw::Interior(d.sample_interior(&mut rng)),
                }
            } else {
                SiteDraw::Interior(d.sample_interior(&mut rng))
            };
            insert_birth(&log, &cfg, site).and_then(|up| {
                let back = remove_birth(&up.log, &up.config, up.site)?;
                if back.config != cfg || !back.log.same_births(&log) {
                    not_restored += 1;
                }
                Ok(up)
            })
        } else {
            remove_birth(&log, &cfg, ids[rng.random_range(0..ids.len())])
        };
        match step {
            Ok(up) => {
                if up.disagreement.kind == ClosureKind::Empty {
                    not_single += 1;
                }
                log = up.log;
                log.clear_archive();
                cfg = up.config;
            }
            // the trace rejects anything that is not one curve
            Err(Error::Consistency(_)) => not_single += 1,
            Err(_) => errors += 1,
        }
    }
    let ok = |n: u64| n == 0;
    Ok(vec![
        StatReport::new("loop_not_single_curve", "count_zero")
            .estimate(not_single as f64, 0.0)
            .judged(0.0, ok(not_single)),
        StatReport::new("insert_remove_not_restored", "count_zero")
            .estimate(not_restored as f64, 0.0)
            .judged(0.0, ok(not_restored)),
        StatReport::new("update_errors", "count_zero").estimate(errors as f64, 0.0).judged(0.0, ok(errors)),
        StatReport::new("updates", "count").estimate(ops as f64, 0.0).judged(1000.0, ops >= 1000),
    ])
}

/// Total length, interior vertex count and boundary vertex count.
fn shape_stats(c: &PolygonalConfiguration, d: &ConvexDomain) -> [f64; 3] {
    [c.total_length(), c.interior_vertex_count(d) as f64, c.boundary_vertex_count(d) as f64]
}

fn transpose(rows: &[[f64; 3]]) -> Vec<Vec<f64>> {
    (0..3).map(|k| rows.iter().map(|r| r[k]).collect()).collect()
}

fn criterion_metropolis(seed: u64, th: &Thresholds) -> Result<Vec<StatReport>> {
    let s = criterion_seed(seed, 4);
    let d = ConvexDomain::square(1.0)?;
    let (chains, per_chain) = (10u64, 30usize);
    let schedule = ChainSchedule { horizon: 10.0 + 3.0 * (per_chain - 1) as f64, thin: 3.0, burn_in: Some(10.0) };
    let params = ModelParams::new(0.0, 0.0, 0.0, 0.0)?;
    let chain_rows: Vec<Vec<[f64; 3]>> = (0..chains)
        .into_par_iter()
        .map(|i| {
            let (snaps, _) =
                run_chain(&d, params, BoundaryCondition::None, schedule, &mut stream(s, &[tag::CHAIN, i]))?;
            Ok(snaps.iter().map(|sn| shape_stats(&sn.cfg.base, &d)).collect())
        })
        .collect::<Result<_>>()?;
    let chain: Vec<[f64; 3]> = chain_rows.into_iter().flatten().collect();
    let direct: Vec<[f64; 3]> = (0..chain.len() as u64)
        .into_par_iter()
        .map(|i| sample_arak(&d, &mut stream(s, &[tag::BIRTH_SITES, i])).map(|(_, c)| shape_stats(&c, &d)))
        .collect::<Result<_>>()?;
    let mut out = stats_two_sampler(
        &transpose(&chain),
        &transpose(&direct),
        &["total_length", "interior_vertices", "boundary_vertices"],
        th,
    );
    out.push(
        StatReport::new("samples_per_arm", "count").estimate(chain.len() as f64, 0.0).judged(300.0, chain.len() >= 300),
    );
    Ok(out)
}

fn criterion_conditioned_poisson(seed: u64, th: &Thresholds) -> Result<Vec<StatReport>> {
    let s = criterion_seed(seed, 5);
    let d = ConvexDomain::disk(Point::ORIGIN, 1.0)?;
    let beta = 4.0;
    let n = 1000usize;
    let schedule = ChainSchedule { horizon: 10.0 + 3.0 * (n - 1) as f64, thin: 3.0, burn_in: Some(10.0) };
    let (snaps, _) = run_bd(BdState::new(d.clone(), beta)?, schedule, &mut stream(s, &[tag::CHAIN]))?;
    let stat = |e: &ContourEnsemble| [e.len() as f64, e.total_length()];
    let dynamic: Vec<[f64; 2]> = snaps.iter().map(|sn| stat(&sn.ensemble)).collect();
    let exact: Vec<[f64; 2]> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            rejection_sample_conditioned_poisson(&d, beta, &mut stream(s, &[tag::REPLICA, i]), 10_000)
                .map(|(e, _)| stat(&e))
        })
        .collect::<Result<_>>()?;
    let cols = |rows: &[[f64; 2]]| (0..2).map(|k| rows.iter().map(|r| r[k]).collect()).collect::<Vec<Vec<f64>>>();
    Ok(stats_two_sampler(&cols(&dynamic), &cols(&exact), &["contour_count", "total_length"], th))
}

fn criterion_length_tail(seed: u64, th: &Thresholds) -> Result<Vec<StatReport>> {
    let s = criterion_seed(seed, 6);
    let cases: Vec<(f64, f64)> = vec![(3.0, 2.0), (3.0, 5.0), (4.0, 2.0), (4.0, 5.0)];
    cases
        .into_par_iter()
        .enumerate()
        .map(|(i, (beta, r))| {
            let mut rng = stream(s, &[tag::WALK, i as u64]);
            let est = theta_walk_estimate(
                None,
                beta,
                VertexRule::Any,
                60.0,
                200_000,
                |c: &Contour| c.length() > r,
                &mut rng,
            )?;
            let bound = 4.0 * PI * (-(beta - 2.0) * r).exp();
            Ok(StatReport::new(format!("tail_mass_beta{beta}_r{r}"), "estimate_le_bound_plus_3se")
                .estimate(est.estimate, est.se)
                .judged(bound, est.estimate <= bound + th.z_tol * est.se))
        })
        .collect()
}

/// Number of contours meeting the window and their length inside it.
fn window_stats(contours: &[Contour], w: &ConvexDomain) -> [f64; 2] {
    let hit: Vec<&Contour> = contours.iter().filter(|c| c.meets(w)).collect();
    [hit.len() as f64, hit.iter().map(|c| c.length_in(w)).sum()]
}

fn criterion_perfect_vs_finite(seed: u64, th: &Thresholds) -> Result<Vec<StatReport>> {
    let s = criterion_seed(seed, 7);
    let beta = 6.0;
    let w = ConvexDomain::square(0.5)?;
    let big = ConvexDomain::square(6.5)?;
    let n = 400usize;
    let thin = 2.0;
    let schedule = ChainSchedule { horizon: 5.0 + thin * (n - 1) as f64, thin, burn_in: Some(5.0) };
    let (snaps, _) = run_bd(BdState::new(big, beta)?, schedule, &mut stream(s, &[tag::CHAIN]))?;
    let finite: Vec<[f64; 2]> = snaps.iter().map(|sn| window_stats(&sn.ensemble.contours, &w)).collect();
    let perfect: Vec<[f64; 2]> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            perfect_sample(&w, beta, subseed(s, &[tag::REPLICA, i]), PerfectCaps::default())
                .map(|p| window_stats(&p.ensemble.contours, &w))
        })
        .collect::<Result<_>>()?;
    let cols = |rows: &[[f64; 2]]| (0..2).map(|k| rows.iter().map(|r| r[k]).collect()).collect::<Vec<Vec<f64>>>();
    let mut out = stats_two_sampler(&cols(&perfect), &cols(&finite), &["window_contours", "window_length"], th);

    let distances = [0.0, 0.025, 0.05, 0.1, 0.2, 0.4];
    let outer = w.dilated_box(3.0);
    let rep = coupled_volumes(
        &outer,
        &w,
        &distances,
        beta,
        600,
        subseed(s, &[tag::FREE_TOP]),
        PerfectCaps::default().clan_cap,
    )?;
    let freq = rep.frequencies();
    out.push(trend_test("coupled_disagreement_trend", &distances, &rep.disagreements, rep.replicas, th));
    out.push(
        StatReport::new("coupled_disagreement_nearest", "frequency")
            .estimate(freq[0], (freq[0] * (1.0 - freq[0]) / rep.replicas as f64).sqrt())
            .judged(0.0, true)
            .advisory(),
    );
    out.push(
        StatReport::new("coupled_disagreement_farthest", "frequency")
            .estimate(freq[freq.len() - 1], 0.0)
            .judged(0.0, true)
            .advisory(),
    );
    Ok(out)
}

fn criterion_domination(seed: u64) -> Result<Vec<StatReport>> {
    let s = criterion_seed(seed, 8);
    let d = ConvexDomain::disk(Point::ORIGIN, 1.5)?;
    let times: Vec<f64> = (0..20).map(|k| 0.25 * k as f64).collect();
    let counts: Vec<(u64, u64, u64)> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(s, &[tag::REPLICA, i]);
            let init = if i % 2 == 0 {
                ContourEnsemble::default()
            } else {
                rejection_sample_conditioned_poisson(&d, 2.0, &mut rng, 10_000)?.0
            };
            let tr = initial_condition_process(&init, &d, 2.0, 5.0, &times, &mut rng)?;
            let mut checks = 0;
            let mut violations = 0;
            let mut overlaps = 0;
            for sn in &tr.snapshots {
                checks += 1;
                violations += u64::from(!sn.dominated());
                overlaps += u64::from(!crate::contour::pairwise_disjoint(&tr.ensemble_at(sn.s_time).contours));
            }
            Ok((checks, violations, overlaps))
        })
        .collect::<Result<_>>()?;
    let checks: u64 = counts.iter().map(|c| c.0).sum();
    let violations: u64 = counts.iter().map(|c| c.1).sum();
    let overlaps: u64 = counts.iter().map(|c| c.2).sum();
    Ok(vec![
        StatReport::new("domination_violations", "count_zero")
            .estimate(violations as f64, 0.0)
            .judged(0.0, violations == 0),
        StatReport::new("accepted_overlaps", "count_zero").estimate(overlaps as f64, 0.0).judged(0.0, overlaps == 0),
        StatReport::new("domination_checks", "count").estimate(checks as f64, 0.0).judged(1000.0, checks >= 1000),
    ])
}

fn criterion_clan_tail(seed: u64, th: &Thresholds) -> Result<Vec<StatReport>> {
    let s = criterion_seed(seed, 9);
    let w = ConvexDomain::square(1.0)?;
    let mut sizes = Vec::new();
    let mut failures = 0u64;
    let mut batch = 0u64;
    while sizes.len() < 10_000 {
        let got: Vec<Result<Vec<usize>>> = (batch * 256..(batch + 1) * 256)
            .into_par_iter()
            .map(|i| {
                perfect_sample(&w, 6.0, subseed(s, &[tag::REPLICA, i]), PerfectCaps::default()).map(|p| p.clan_sizes)
            })
            .collect();
        for r in got {
            match r {
                Ok(v) => sizes.extend(v),
                Err(Error::ClanCap { .. }) => failures += 1,
                Err(e) => return Err(e),
            }
        }
        batch += 1;
    }
    let (mut reports, _) = clan_tail_fit(&sizes, failures, th)?;
    let max = sizes.iter().copied().max().unwrap_or(0);
    reports.push(StatReport::new("clan_count", "count").estimate(sizes.len() as f64, 0.0).judged(1e4, true));
    reports.push(StatReport::new("clan_max_size", "max").estimate(max as f64, 0.0).judged(0.0, true).advisory());
    Ok(reports)
}

fn criterion_connective(seed: u64, th: &Thresholds) -> Result<Vec<StatReport>> {
    let s = criterion_seed(seed, 10);
    let (rep, _) = estimate_connective_constant(100_000, 2.0, 8.0, &mut stream(s, &[tag::WALK]), th)?;
    Ok(vec![rep])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criterion_one_passes_and_unknown_ids_fail() {
        let th = Thresholds::default();
        let ok = run_criterion(1, 0, &th);
        assert!(ok.pass());
        assert!(ok.line().contains("PASS"));
        assert!(!run_criterion(42, 0, &th).pass());
    }
}
