//! Goodness-of-fit and regression helpers used by tests and the harness.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size used for the asymptotic law.
    pub n_eff: f64,
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        s += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic p-value with Stephens' small-sample correction.
fn ks_p(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    KsResult { statistic: d, p_value: ks_p(d, n), n_eff: n }
}

/// Two-sample Kolmogorov-Smirnov test. Ties are stepped together, which
/// makes the asymptotic p-value conservative for discrete data.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    if n == 0 || m == 0 {
        return KsResult { statistic: 0.0, p_value: 1.0, n_eff: 0.0 };
    }
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    KsResult { statistic: d, p_value: ks_p(d, n_eff), n_eff }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Mean and variance of a count sample compared with a Poisson target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub n: usize,
    pub target: f64,
    pub mean: f64,
    pub se_mean: f64,
    pub variance: f64,
    pub se_variance: f64,
}

impl Dispersion {
    pub fn mean_z(&self) -> f64 {
        (self.mean - self.target) / self.se_mean
    }

    pub fn variance_z(&self) -> f64 {
        (self.variance - self.target) / self.se_variance
    }

    /// Variance-to-mean ratio.
    pub fn ratio(&self) -> f64 {
        self.variance / self.mean
    }

    pub fn passes(&self, k: f64) -> bool {
        self.mean_z().abs() <= k && self.variance_z().abs() <= k
    }
}

/// Poisson dispersion summary with standard errors from the Poisson target:
/// `sqrt(mu/n)` for the mean and `sqrt((mu + 2 mu^2)/n)` for the variance.
pub fn poisson_dispersion(counts: &[f64], target: f64) -> Dispersion {
    let n = counts.len();
    let nf = n as f64;
    Dispersion {
        n,
        target,
        mean: mean(counts),
        se_mean: (target / nf).sqrt(),
        variance: variance(counts),
        se_variance: ((target + 2.0 * target * target) / nf).sqrt(),
    }
}

/// Holm step-down procedure; returns which hypotheses are rejected.
pub fn holm(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    let mut reject = vec![false; m];
    for (k, &i) in idx.iter().enumerate() {
        if p_values[i] <= alpha / (m - k) as f64 {
            reject[i] = true;
        } else {
            break;
        }
    }
    reject
}

/// Weighted least squares fit of `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub se_slope: f64,
}

impl LinearFit {
    pub fn slope_z(&self) -> f64 {
        self.slope / self.se_slope
    }

    /// One-sided p-value for `slope < 0`.
    pub fn p_negative(&self) -> f64 {
        normal_cdf(self.slope_z())
    }

    /// One-sided p-value for `slope > 0`.
    pub fn p_positive(&self) -> f64 {
        1.0 - normal_cdf(self.slope_z())
    }
}

/// Weighted least squares with weights taken as inverse variances, so the
/// slope standard error is `sqrt(1 / S_xx)` without residual rescaling.
pub fn weighted_fit(x: &[f64], y: &[f64], w: &[f64]) -> LinearFit {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += w[i] * (x[i] - mx).powi(2);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    let slope = sxy / sxx;
    LinearFit { intercept: my - slope * mx, slope, se_slope: (1.0 / sxx).sqrt() }
}

/// Ordinary least squares with the usual residual-based slope error.
pub fn ols_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let s2 = rss / (n - 2.0).max(1.0);
    LinearFit { intercept, slope, se_slope: (s2 / sxx).sqrt() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anova {
    pub f: f64,
    pub p_value: f64,
}

/// One-way analysis of variance across groups.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Anova {
    let k = groups.len();
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let ssb: f64 = groups.iter().map(|g| g.len() as f64 * (mean(g) - grand).powi(2)).sum();
    let ssw: f64 = groups
        .iter()
        .map(|g| {
            let m = mean(g);
            g.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        })
        .sum();
    let df1 = (k - 1) as f64;
    let df2 = (n - k) as f64;
    if ssw == 0.0 {
        let p = if ssb == 0.0 { 1.0 } else { 0.0 };
        return Anova { f: if ssb == 0.0 { 0.0 } else { f64::INFINITY }, p_value: p };
    }
    let f = (ssb / df1) / (ssw / df2);
    let p = FisherSnedecor::new(df1, df2).map(|d| d.sf(f)).unwrap_or(f64::NAN);
    Anova { f, p_value: p }
}

pub fn normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

/// Upper standard normal quantile for a one-sided level.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn kolmogorov_known_values() {
        // tabulated critical values of the limiting distribution
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn uniform_sample_passes_one_sample_test() {
        let mut r = stream(1, &[]);
        let xs: Vec<f64> = (0..5000).map(|_| r.random::<f64>()).collect();
        assert!(ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).p_value > 0.01);
        let shifted: Vec<f64> = xs.iter().map(|x| x * 0.9).collect();
        assert!(ks_one_sample(&shifted, |x| x.clamp(0.0, 1.0)).p_value < 1e-6);
    }

    #[test]
    fn two_sample_rejection_rate_is_near_level() {
        let mut r = stream(2, &[]);
        let trials = 400;
        let mut rejects = 0;
        for _ in 0..trials {
            let a: Vec<f64> = (0..200).map(|_| r.random::<f64>()).collect();
            let b: Vec<f64> = (0..200).map(|_| r.random::<f64>()).collect();
            if ks_two_sample(&a, &b).p_value < 0.05 {
                rejects += 1;
            }
        }
        let rate = rejects as f64 / trials as f64;
        assert!(rate < 0.09, "{rate}");
    }

    #[test]
    fn holm_orders_thresholds() {
        assert_eq!(holm(&[0.001, 0.04, 0.03], 0.05), vec![true, false, false]);
        assert_eq!(holm(&[0.001, 0.02, 0.03], 0.05), vec![true, true, true]);
    }

    #[test]
    fn regression_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 - 2.0 * v).collect();
        let f = weighted_fit(&x, &y, &[1.0; 10]);
        assert!((f.slope + 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        let g = ols_fit(&x, &y);
        assert!((g.slope + 2.0).abs() < 1e-12);
    }

    #[test]
    fn anova_detects_shift() {
        let mut r = stream(3, &[]);
        let g =
            |shift: f64, r: &mut crate::rng::StreamRng| (0..200).map(|_| r.random::<f64>() + shift).collect::<Vec<_>>();
        let same = vec![g(0.0, &mut r), g(0.0, &mut r), g(0.0, &mut r)];
        assert!(one_way_anova(&same).p_value > 0.001);
        let diff = vec![g(0.0, &mut r), g(0.3, &mut r)];
        assert!(one_way_anova(&diff).p_value < 1e-6);
    }
}
