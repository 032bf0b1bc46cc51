//! Distributional checks of the graphical construction.

use arak_core::contour::{theta_walk_estimate, VertexRule};
use arak_core::contour_bd::{run_bd, BdState, ContourEnsemble};
use arak_core::geometry::{ConvexDomain, Point};
use arak_core::graphical::{initial_condition_process, occupancy_covariance, FreeProcess, PerfectCaps};
use arak_core::metropolis::ChainSchedule;
use arak_core::rng::stream;
use arak_core::stats::{ks_two_sample, mean, ols_fit, poisson_dispersion};

#[test]
fn free_window_counts_are_poisson_with_the_estimated_mass() {
    let region = ConvexDomain::square(1.5).unwrap();
    let w = ConvexDomain::square(0.5).unwrap();
    let beta = 3.0;
    let n = 1500;
    let counts: Vec<f64> = (0..n)
        .map(|s| {
            let fp = FreeProcess::stationary(region.clone(), beta, s).unwrap();
            fp.instances().iter().filter(|i| i.alive_at(0.0) && i.contour.meets(&w)).count() as f64
        })
        .collect();
    let mass = theta_walk_estimate(
        Some(&region),
        beta,
        VertexRule::Leftmost,
        40.0,
        400_000,
        |c| c.meets(&w),
        &mut stream(9, &[]),
    )
    .unwrap();
    let d = poisson_dispersion(&counts, mass.estimate);
    let z = (d.mean - mass.estimate) / d.se_mean.hypot(mass.se);
    assert!(z.abs() < 3.5, "mean {} vs mass {:?}", d.mean, mass);
    assert!(d.variance_z().abs() < 3.5, "{d:?}");
}

#[test]
fn forward_construction_from_empty_matches_the_dynamics() {
    let d = ConvexDomain::disk(Point::ORIGIN, 1.5).unwrap();
    let (beta, horizon) = (2.0, 2.0);
    let n = 400u64;
    let stat = |e: &ContourEnsemble| (e.len() as f64, e.total_length());
    let (mut ca, mut la, mut cb, mut lb) = (vec![], vec![], vec![], vec![]);
    for i in 0..n {
        let tr = initial_condition_process(&ContourEnsemble::default(), &d, beta, horizon, &[], &mut stream(10, &[i]))
            .unwrap();
        let (c, l) = stat(&tr.ensemble_at(horizon));
        ca.push(c);
        la.push(l);
        let schedule = ChainSchedule { horizon, thin: 1.0, burn_in: Some(horizon) };
        let (snaps, _) = run_bd(BdState::new(d.clone(), beta).unwrap(), schedule, &mut stream(11, &[i])).unwrap();
        let (c, l) = stat(&snaps[0].ensemble);
        cb.push(c);
        lb.push(l);
    }
    assert!(ks_two_sample(&ca, &cb).p_value > 0.005, "{} vs {}", mean(&ca), mean(&cb));
    assert!(ks_two_sample(&la, &lb).p_value > 0.005);
}

#[test]
fn occupancy_covariance_decays_with_separation() {
    let seps = [0.0, 0.5, 1.0, 2.0, 3.0];
    let cov = occupancy_covariance(1.0, &seps, 4.0, 300, 12, PerfectCaps::default()).unwrap();
    // at zero separation the covariance is the occupancy variance
    assert!(cov[0].1 > 0.05, "{cov:?}");
    let x: Vec<f64> = cov.iter().map(|c| c.0).collect();
    let y: Vec<f64> = cov.iter().map(|c| c.1).collect();
    let fit = ols_fit(&x, &y);
    assert!(fit.slope < 0.0, "{fit:?}");
    assert!(cov[4].1.abs() < 4.0 * cov[4].2.max(1e-3), "{cov:?}");
}
