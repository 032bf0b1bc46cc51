use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{StatReport, Thresholds};
use crate::contour::self_avoiding_lifetime;
use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, PolygonalConfiguration};
use crate::stats::{holm, ks_two_sample, normal_cdf, normal_quantile, one_way_anova, poisson_dispersion, weighted_fit};

const DIRECTIONS: [&str; 4] = ["left", "right", "up", "down"];

/// Dispersion checks of the four extreme-vertex counts against the Poisson
/// law with mean `pi A(D)`, plus a symmetry check across directions.
pub fn stats_extreme_vertices(
    samples: &[PolygonalConfiguration],
    domain: &ConvexDomain,
    th: &Thresholds,
) -> Result<Vec<StatReport>> {
    if samples.len() < 10 {
        return Err(Error::Budget { needed: 10, got: samples.len() });
    }
    let target = std::f64::consts::PI * domain.area();
    let counts: Vec<[usize; 4]> = samples.iter().map(|c| c.extreme_vertex_counts(domain)).collect();
    let mut out = Vec::new();
    let mut groups = Vec::new();
    for (k, dir) in DIRECTIONS.iter().enumerate() {
        let xs: Vec<f64> = counts.iter().map(|c| c[k] as f64).collect();
        let d = poisson_dispersion(&xs, target);
        out.push(
            StatReport::new(format!("extreme_{dir}_mean"), "z_vs_pi_area")
                .estimate(d.mean, d.se_mean)
                .judged(th.z_tol, d.mean_z().abs() <= th.z_tol),
        );
        out.push(
            StatReport::new(format!("extreme_{dir}_variance"), "z_vs_pi_area")
                .estimate(d.variance, d.se_variance)
                .judged(th.z_tol, d.variance_z().abs() <= th.z_tol),
        );
        groups.push(xs);
    }
    // the four counts share samples, so this is a symmetry indication only
    let a = one_way_anova(&groups);
    out.push(
        StatReport::new("extreme_direction_symmetry", "anova")
            .estimate(a.f, 0.0)
            .p(a.p_value)
            .judged(th.level, a.p_value > th.level)
            .advisory(),
    );
    Ok(out)
}

/// Two-sample KS test per named statistic with Holm correction.
pub fn stats_two_sampler(a: &[Vec<f64>], b: &[Vec<f64>], names: &[&str], th: &Thresholds) -> Vec<StatReport> {
    let tests: Vec<_> = a.iter().zip(b).map(|(x, y)| ks_two_sample(x, y)).collect();
    let p: Vec<f64> = tests.iter().map(|t| t.p_value).collect();
    let rejected = holm(&p, th.level);
    names
        .iter()
        .zip(&tests)
        .zip(rejected)
        .map(|((name, t), rej)| {
            StatReport::new(*name, "ks_two_sample_holm").estimate(t.statistic, 0.0).p(t.p_value).judged(th.level, !rej)
        })
        .collect()
}

/// Empirical survival at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub x: f64,
    pub survival: f64,
    pub count: u64,
}

fn survival_at(sorted: &[f64], x: f64) -> u64 {
    (sorted.len() - sorted.partition_point(|&v| v <= x)) as u64
}

/// Decay rate of the self-avoiding survival `P(tau > T)`: the hazard over
/// `[t_lo, t_hi]`, `-(log S(t_hi) - log S(t_lo)) / (t_hi - t_lo)`, with a
/// binomial standard error. Positivity is judged by the one-sided lower
/// confidence bound.
pub fn estimate_connective_constant<R: Rng + ?Sized>(
    walks: u64,
    t_lo: f64,
    t_hi: f64,
    rng: &mut R,
    th: &Thresholds,
) -> Result<(StatReport, Vec<SurvivalPoint>)> {
    if walks < 10_000 {
        return Err(Error::Budget { needed: 10_000, got: walks as usize });
    }
    if !(0.0 <= t_lo && t_lo < t_hi) {
        return Err(Error::Parameter(format!("need 0 <= t_lo < t_hi, got [{t_lo}, {t_hi}]")));
    }
    let mut life: Vec<f64> = (0..walks).map(|_| self_avoiding_lifetime(rng, t_hi + 1.0).0).collect();
    life.sort_by(f64::total_cmp);
    let n = walks as f64;
    let curve: Vec<SurvivalPoint> = (0..=((t_hi + 1.0) * 2.0) as usize)
        .map(|i| {
            let x = 0.5 * i as f64;
            let c = survival_at(&life, x);
            SurvivalPoint { x, survival: c as f64 / n, count: c }
        })
        .collect();
    let (k_lo, k_hi) = (survival_at(&life, t_lo), survival_at(&life, t_hi));
    if k_hi == 0 {
        return Err(Error::Budget { needed: 1, got: 0 });
    }
    let p = k_hi as f64 / k_lo as f64;
    let eps = -p.ln() / (t_hi - t_lo);
    let se = ((1.0 - p) / (k_lo as f64 * p)).sqrt() / (t_hi - t_lo);
    let lower = eps - normal_quantile(th.confidence) * se;
    let report = StatReport::new("connective_constant", "hazard_lower_bound")
        .estimate(eps, se)
        .p(1.0 - normal_cdf(eps / se))
        .judged(0.0, lower > 0.0);
    Ok((report, curve))
}

/// Log-survival of clan sizes, fitted by weighted least squares on
/// `log S(n)` with `var = (1 - S) / (N S)`. The first size with zero survival
/// enters with half a count so that a steep drop is still testable.
pub fn clan_tail_fit(
    sizes: &[usize],
    cap_failures: u64,
    th: &Thresholds,
) -> Result<(Vec<StatReport>, Vec<SurvivalPoint>)> {
    if sizes.len() < 100 {
        return Err(Error::Budget { needed: 100, got: sizes.len() });
    }
    let n = sizes.len() as f64;
    let max = sizes.iter().copied().max().unwrap_or(1);
    let mut pts = Vec::new();
    for s in 1..=max + 1 {
        let c = sizes.iter().filter(|&&x| x >= s).count() as u64;
        pts.push(SurvivalPoint { x: s as f64, survival: c as f64 / n, count: c });
        if c == 0 {
            break;
        }
    }
    let (mut x, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for p in &pts {
        let c = if p.count == 0 { 0.5 } else { p.count as f64 };
        let s = c / n;
        let var = ((1.0 - s) / c).max(1.0 / n);
        x.push(p.x);
        y.push(s.ln());
        w.push(1.0 / var);
    }
    let fit = weighted_fit(&x, &y, &w);
    let p = fit.p_negative();
    let attempts = n + cap_failures as f64;
    let rate = cap_failures as f64 / attempts;
    let reports = vec![
        StatReport::new("clan_log_survival_slope", "wls_slope_negative")
            .estimate(fit.slope, fit.se_slope)
            .p(p)
            .judged(th.level, fit.slope < 0.0 && p < th.level),
        StatReport::new("clan_cap_rate", "rate_below")
            .estimate(rate, (rate * (1.0 - rate) / attempts).sqrt())
            .judged(1e-3, rate < 1e-3),
    ];
    Ok((reports, pts))
}

/// Cochran-Armitage test for a decreasing trend of proportions `k_i / n`
/// with scores `x_i`.
pub fn trend_test(name: &str, x: &[f64], k: &[u64], n: u64, th: &Thresholds) -> StatReport {
    let nf = n as f64;
    let total: f64 = k.iter().map(|&v| v as f64).sum();
    let big_n = nf * x.len() as f64;
    let pbar = total / big_n;
    let t: f64 = x.iter().zip(k).map(|(xi, &ki)| xi * (ki as f64 - nf * pbar)).sum();
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let var = pbar * (1.0 - pbar) * nf * (sxx - sx * sx * nf / big_n);
    let z = if var > 0.0 { t / var.sqrt() } else { 0.0 };
    let p = normal_cdf(z);
    StatReport::new(name, "cochran_armitage_decreasing").estimate(z, 1.0).p(p).judged(th.level, p < th.level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn extreme_vertices_need_samples() {
        let d = ConvexDomain::square(1.0).unwrap();
        let few = vec![PolygonalConfiguration::empty(); 3];
        assert!(matches!(stats_extreme_vertices(&few, &d, &Thresholds::default()), Err(Error::Budget { .. })));
    }

    #[test]
    fn two_sampler_is_calibrated() {
        let th = Thresholds { level: 0.05, ..Thresholds::default() };
        let mut r = stream(1, &[]);
        let mut rejections = 0;
        let trials = 400;
        for _ in 0..trials {
            let a: Vec<f64> = (0..200).map(|_| r.random::<f64>()).collect();
            let b: Vec<f64> = (0..200).map(|_| r.random::<f64>()).collect();
            let rep = stats_two_sampler(&[a], &[b], &["u"], &th);
            rejections += usize::from(!rep[0].pass);
        }
        let rate = rejections as f64 / trials as f64;
        // the asymptotic KS law is slightly conservative at this size
        assert!(rate < 0.05 + 3.0 * (0.05f64 * 0.95 / trials as f64).sqrt(), "{rate}");
        assert!(rate > 0.005, "{rate}");
    }

    #[test]
    fn connective_constant_survival_starts_at_one() {
        let (rep, curve) =
            estimate_connective_constant(10_000, 2.0, 6.0, &mut stream(2, &[]), &Thresholds::default()).unwrap();
        assert_eq!(curve[0].survival, 1.0);
        assert!(curve.windows(2).all(|w| w[1].survival <= w[0].survival));
        assert!(rep.estimate > 0.0);
        assert!(estimate_connective_constant(100, 2.0, 6.0, &mut stream(2, &[]), &Thresholds::default()).is_err());
    }

    #[test]
    fn clan_tail_on_geometric_sizes() {
        let mut r = stream(3, &[]);
        let sizes: Vec<usize> = (0..5000)
            .map(|_| {
                let mut k = 1;
                while r.random::<f64>() < 0.3 {
                    k += 1;
                }
                k
            })
            .collect();
        let (rep, pts) = clan_tail_fit(&sizes, 0, &Thresholds::default()).unwrap();
        assert!(rep.iter().all(|x| x.pass));
        // survival ratio 0.3 per step
        assert!((rep[0].estimate - 0.3f64.ln()).abs() < 0.1, "{}", rep[0].estimate);
        assert_eq!(pts[0].survival, 1.0);
        let (flat, _) = clan_tail_fit(&vec![1; 200], 1, &Thresholds::default()).unwrap();
        assert!(flat[0].pass);
        assert!(!flat[1].pass);
    }

    #[test]
    fn trend_detects_decrease_only() {
        let th = Thresholds::default();
        let x = [0.5, 1.0, 2.0, 4.0];
        assert!(trend_test("t", &x, &[40, 25, 10, 2], 200, &th).pass);
        assert!(!trend_test("t", &x, &[2, 10, 25, 40], 200, &th).pass);
        assert!(!trend_test("t", &x, &[0, 0, 0, 0], 200, &th).pass);
    }
}
